//! Scalar fields `f: ℝᵏ → ℝ`: the expression grammar, a builtin catalog,
//! finite differences and sampled convexity evidence.

pub mod catalog;
mod expr;
mod field;

pub use expr::{EvalError, Expr, ParseError, ParseErrorKind};
pub use field::{Convexity, ScalarField};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::Simplex;

/// Parses `text` as a field of dimension `k` with an unknown convexity tag.
pub fn parse_field(text: &str, k: usize) -> Result<ScalarField, ParseError> {
    Ok(ScalarField::from_expr(Expr::parse(text, k)?, k))
}

/// Default central-difference step for coordinate value `x`.
pub fn default_step(x: f64) -> f64 {
    f64::max(1e-6, 1e-6 * x.abs())
}

/// Central-difference gradient. `h = None` uses [`default_step`] per coordinate.
pub fn finite_diff_gradient(f: &ScalarField, p: &[f64], h: Option<f64>) -> Result<Vec<f64>, EvalError> {
    let mut x = p.to_vec();
    (0..p.len())
        .map(|i| {
            let step = h.unwrap_or_else(|| default_step(p[i]));
            x[i] = p[i] + step;
            let hi = f.eval(&x);
            x[i] = p[i] - step;
            let lo = f.eval(&x);
            x[i] = p[i];
            Ok((hi? - lo?) / (2.0 * step))
        })
        .collect()
}

/// Central-difference Hessian with a uniform step `h`.
#[allow(clippy::needless_range_loop)]
pub fn finite_diff_hessian(f: &ScalarField, p: &[f64], h: f64) -> Result<Vec<Vec<f64>>, EvalError> {
    let k = p.len();
    let mut x = p.to_vec();
    let mut at = |di: usize, si: f64, dj: usize, sj: f64| {
        x.copy_from_slice(p);
        x[di] += si * h;
        x[dj] += sj * h;
        f.eval(&x)
    };
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = if i == j {
                let f0 = f.eval(p)?;
                (at(i, 1.0, i, 0.0)? - 2.0 * f0 + at(i, -1.0, i, 0.0)?) / (h * h)
            } else {
                (at(i, 1.0, j, 1.0)? - at(i, 1.0, j, -1.0)? - at(i, -1.0, j, 1.0)? + at(i, -1.0, j, -1.0)?)
                    / (4.0 * h * h)
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexityEvidence {
    Convex,
    Concave,
    /// No violation in either direction.
    Affine,
    Neither,
}

/// Outcome of the sampled midpoint test.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub verdict: ConvexityEvidence,
    pub trials: usize,
    pub convex_violations: usize,
    pub concave_violations: usize,
    /// Largest `f(mid) − (f(x)+f(y))/2`; positive values break convexity.
    pub worst_convex_margin: f64,
    /// Largest `(f(x)+f(y))/2 − f(mid)`; positive values break concavity.
    pub worst_concave_margin: f64,
    pub evaluation_failures: usize,
}

pub const DEFAULT_SEED: u64 = 0x5eed_a11f;

/// Midpoint convexity test on `n` random segments inside `s`.
pub fn sample_convexity(f: &ScalarField, s: &Simplex, n: usize, seed: u64) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConvexityReport {
        verdict: ConvexityEvidence::Affine,
        trials: n,
        convex_violations: 0,
        concave_violations: 0,
        worst_convex_margin: f64::NEG_INFINITY,
        worst_concave_margin: f64::NEG_INFINITY,
        evaluation_failures: 0,
    };
    for _ in 0..n {
        let x = s.sample_uniform(&mut rng);
        let y = s.sample_uniform(&mut rng);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (fx, fy, fm) = match (f.eval(&x), f.eval(&y), f.eval(&mid)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => {
                report.evaluation_failures += 1;
                continue;
            }
        };
        let gap = fm - 0.5 * (fx + fy);
        let tol = 1e-9 * (1.0 + fx.abs().max(fy.abs()).max(fm.abs()));
        report.worst_convex_margin = report.worst_convex_margin.max(gap);
        report.worst_concave_margin = report.worst_concave_margin.max(-gap);
        if gap > tol {
            report.convex_violations += 1;
        }
        if -gap > tol {
            report.concave_violations += 1;
        }
    }
    report.verdict = match (report.convex_violations, report.concave_violations) {
        (0, 0) => ConvexityEvidence::Affine,
        (0, _) => ConvexityEvidence::Convex,
        (_, 0) => ConvexityEvidence::Concave,
        _ => ConvexityEvidence::Neither,
    };
    report
}

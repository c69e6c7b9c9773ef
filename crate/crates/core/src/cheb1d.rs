//! The interval case: best line on `[p, q]` written as
//! `L(x) = f(y) + s·d + m(x − y)` with `s = +1` for convex and `−1` for
//! concave fields, plus a three-point alternation verifier.

use serde::Serialize;
use thiserror::Error;

use crate::affine_core::{best_affine_with, AffineFunction, ApproxError};
use crate::funcspec::{Convexity, EvalError, ScalarField};
use crate::geometry::{GeometryError, Simplex};
use crate::ToleranceConfig;

#[derive(Debug, Error, Clone)]
pub enum ChebError {
    #[error("interval requires p < q (got p={p}, q={q})")]
    EmptyInterval { p: f64, q: f64 },
    #[error("denominator vanishes in [{p}, {q}]")]
    PoleInInterval { p: f64, q: f64 },
    #[error("only {found} alternating extrema at the norm level (need 3); the line is not optimal")]
    FewerAlternations { found: usize },
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error("field evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Serialize)]
pub struct BestLine {
    pub p: f64,
    pub q: f64,
    /// Slope, equal to the secant slope `(f(q) − f(p))/(q − p)`.
    pub m: f64,
    pub y: f64,
    pub value_at_witness: f64,
    /// Minimax error, `≥ 0`.
    pub d: f64,
    pub convexity_used: Convexity,
}

impl BestLine {
    /// `L(y) − f(y)`: `+d` for convex fields, `−d` for concave ones.
    pub fn signed_offset(&self) -> f64 {
        match self.convexity_used {
            Convexity::Concave => -self.d,
            _ => self.d,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.value_at_witness + self.signed_offset() + self.m * (x - self.y)
    }

    pub fn to_affine(&self) -> AffineFunction {
        AffineFunction::new(vec![self.m], self.eval(0.0))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlternationCertificate {
    pub points: [f64; 3],
    /// Signs of `f − L`; all zero for a trivially optimal (exact) line.
    pub signs: [i8; 3],
    pub magnitude: f64,
    pub trivial: bool,
}

fn interval(p: f64, q: f64) -> Result<Simplex, ChebError> {
    if !(p < q) {
        return Err(ChebError::EmptyInterval { p, q });
    }
    Ok(Simplex::from_rows(&[[p], [q]])?)
}

pub fn best_line(p: f64, q: f64, f: &ScalarField, tag: Convexity) -> Result<BestLine, ChebError> {
    best_line_with(p, q, f, tag, &ToleranceConfig::default())
}

pub fn best_line_with(
    p: f64,
    q: f64,
    f: &ScalarField,
    tag: Convexity,
    tol: &ToleranceConfig,
) -> Result<BestLine, ChebError> {
    let s = interval(p, q)?;
    let r = best_affine_with(&s, f, tag, tol)?;
    let y = r.witness[0];
    Ok(BestLine {
        p,
        q,
        m: r.sigma.alpha[0],
        y,
        value_at_witness: f.eval(&[y])?,
        d: r.d,
        convexity_used: r.convexity_used,
    })
}

/// Best line for `(a x + b)/(c x + e)` on `[p, q]`.
pub fn hyperbola_best_line(a: f64, b: f64, c: f64, e: f64, p: f64, q: f64) -> Result<BestLine, ChebError> {
    if !(p < q) {
        return Err(ChebError::EmptyInterval { p, q });
    }
    let (dp, dq) = (c * p + e, c * q + e);
    if dp * dq <= 0.0 {
        return Err(ChebError::PoleInInterval { p, q });
    }
    let det = a * e - b * c;
    // f'' = −2c(ae − bc)/(cx + e)³, constant sign on the interval
    let curvature = -2.0 * c * det * dp.signum();
    let tag = if curvature >= 0.0 {
        Convexity::Convex
    } else {
        Convexity::Concave
    };
    let f = ScalarField::new(1, format!("({a}*x1 + {b})/({c}*x1 + {e})"), move |x| {
        let den = c * x[0] + e;
        if den == 0.0 {
            return Err(EvalError::Pole);
        }
        Ok((a * x[0] + b) / den)
    })
    .with_gradient(move |x| {
        let den = c * x[0] + e;
        Ok(vec![det / (den * den)])
    })
    .with_convexity(tag);
    best_line(p, q, &f, tag)
}

fn golden_max<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if (hi - lo) <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + ratio * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - ratio * (hi - lo);
            g1 = g(x1);
        }
    }
    if g1 >= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Finds three alternating extrema of `f − line` at the uniform norm level.
pub fn verify_equioscillation(
    f: &ScalarField,
    line: &AffineFunction,
    p: f64,
    q: f64,
    grid_n: usize,
) -> Result<AlternationCertificate, ChebError> {
    if !(p < q) {
        return Err(ChebError::EmptyInterval { p, q });
    }
    let n = grid_n.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                q
            } else {
                p + (q - p) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let res = |x: f64| -> Result<f64, EvalError> { Ok(f.eval(&[x])? - line.eval(&[x])) };
    let rs = xs.iter().map(|&x| res(x)).collect::<Result<Vec<_>, _>>()?;
    let scale = rs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let fscale = xs
        .iter()
        .map(|&x| f.eval(&[x]).map(f64::abs))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
    if scale <= 1e-12 * (1.0 + fscale) {
        return Ok(AlternationCertificate {
            points: [p, 0.5 * (p + q), q],
            signs: [0; 3],
            magnitude: scale,
            trivial: true,
        });
    }

    // runs of constant sign, ignoring near-zero samples
    let zero = 1e-12 * (1.0 + fscale);
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        if rs[i].abs() <= zero {
            i += 1;
            continue;
        }
        let sign = rs[i].signum();
        let start = i;
        while i < n && rs[i].signum() == sign && rs[i].abs() > zero {
            i += 1;
        }
        let best = (start..i)
            .max_by(|&a, &b| (sign * rs[a]).total_cmp(&(sign * rs[b])))
            .unwrap();
        let lo = xs[best.saturating_sub(1)];
        let hi = xs[(best + 1).min(n - 1)];
        let signed = |x: f64| res(x).map(|r| sign * r).unwrap_or(f64::NEG_INFINITY);
        let (mut bx, mut bv) = golden_max(signed, lo, hi);
        if sign * rs[best] >= bv {
            bx = xs[best];
            bv = sign * rs[best];
        }
        extrema.push((bx, sign * bv));
    }

    let norm = extrema.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
    let level = 1e-6;
    let mut best_run: Vec<(f64, f64)> = Vec::new();
    let mut run: Vec<(f64, f64)> = Vec::new();
    for &(x, r) in &extrema {
        if (r.abs() - norm).abs() > level {
            run.clear();
            continue;
        }
        if run.last().is_some_and(|&(_, prev)| prev.signum() == r.signum()) {
            run.clear();
        }
        run.push((x, r));
        if run.len() > best_run.len() {
            best_run = run.clone();
        }
    }
    if best_run.len() < 3 {
        return Err(ChebError::FewerAlternations { found: best_run.len() });
    }
    let t = &best_run[..3];
    Ok(AlternationCertificate {
        points: [t[0].0, t[1].0, t[2].0],
        signs: [t[0].1.signum() as i8, t[1].1.signum() as i8, t[2].1.signum() as i8],
        magnitude: norm,
        trivial: false,
    })
}

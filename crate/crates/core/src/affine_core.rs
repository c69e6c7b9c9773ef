//! Best uniform affine approximant of a convex or concave field on a simplex.
//!
//! The secant `π` interpolates `f` at the vertices. For convex `f` the
//! graph lies on or below `π`; sliding `π` down until it touches the graph
//! gives the supporting hyperplane `ρ = π + β″` with `β″ = min (f − π) ≤ 0`.
//! The midplane `σ = π + β″/2` is the minimax approximant: the residual
//! `f − σ` equals `+d` at every vertex and `−d` at the touching point, with
//! `d = |β″|/2`. Concave fields mirror this with a maximum.
//!
//! The same construction is optimal whenever `f` lies entirely on one side
//! of its secant, convex or not; [`best_affine`] falls back to that test
//! when the convexity tag is unknown and sampling is inconclusive.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcspec::{
    sample_convexity, Convexity, ConvexityEvidence, ConvexityReport, EvalError, ScalarField, DEFAULT_SEED,
};
use crate::geometry::{project_probability_simplex, GeometryError, LatticePoint, Simplex};
use crate::ToleranceConfig;

#[derive(Debug, Error, Clone)]
pub enum ApproxError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("field evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("field has dimension {field} but simplex has dimension {simplex}")]
    DimensionMismatch { field: usize, simplex: usize },
    #[error("interpolation residual {residual:.3e} exceeds tolerance")]
    Interpolation { residual: f64 },
    #[error("convexity violation: f − π = {excess:.3e} at {point:?} is on the wrong side of the secant")]
    ConvexityViolation { point: Vec<f64>, excess: f64 },
    #[error("cannot establish convexity, concavity or secant dominance ({} convex / {} concave midpoint violations)", report.convex_violations, report.concave_violations)]
    ConvexityUnknown { report: Box<ConvexityReport> },
    #[error("field crosses its secant; the one-sided construction does not apply")]
    NotDominated,
}

/// `g(x) = αᵀx + β`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineFunction {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl AffineFunction {
    pub fn new(alpha: Vec<f64>, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.alpha.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.beta
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self::new(self.alpha.clone(), self.beta + c)
    }

    pub fn is_finite(&self) -> bool {
        self.beta.is_finite() && self.alpha.iter().all(|a| a.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    /// `f ≤ π` on the simplex.
    Below,
    /// `f ≥ π` on the simplex.
    Above,
    Neither,
}

/// How the side of the secant was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Caller or field tag.
    Tagged,
    /// Midpoint sampling.
    Sampled,
    /// Lattice scan of `f − π`.
    SecantDominance,
}

/// Result of the extremal search for `β″`.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalShift {
    pub beta_double_prime: f64,
    pub witness: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖P(λ − τ∇) − λ‖∞` at the returned point (barycentric coordinates,
    /// `τ` the last Barzilai–Borwein step).
    pub stationarity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationResult {
    pub sigma: AffineFunction,
    pub d: f64,
    pub witness: Vec<f64>,
    pub interpolant: AffineFunction,
    pub beta_double_prime: f64,
    pub vertex_residuals: Vec<f64>,
    pub convexity_used: Convexity,
    pub route: Route,
    pub search: ExtremalShift,
}

impl ApproximationResult {
    /// The supporting hyperplane `ρ = σ − d` (convex) or `σ + d` (concave).
    pub fn support(&self) -> AffineFunction {
        self.interpolant.shifted(self.beta_double_prime)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub grid_n: usize,
    pub samples: usize,
    pub sup_abs_residual: f64,
    pub argmax: Vec<f64>,
    pub argmax_index: Vec<u32>,
    pub vertex_residuals: Vec<f64>,
}

fn check_dim(s: &Simplex, f: &ScalarField) -> Result<(), ApproxError> {
    if f.dim() != s.dim() {
        return Err(ApproxError::DimensionMismatch {
            field: f.dim(),
            simplex: s.dim(),
        });
    }
    Ok(())
}

fn vertex_values(s: &Simplex, f: &ScalarField) -> Result<Vec<f64>, ApproxError> {
    s.vertices().iter().map(|v| f.eval(v).map_err(Into::into)).collect()
}

fn vertex_scale(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Affine interpolant `π = (α′, β′)` of `f` at the vertices of `s`.
pub fn interpolant(s: &Simplex, f: &ScalarField) -> Result<AffineFunction, ApproxError> {
    interpolant_with(s, f, &ToleranceConfig::default())
}

pub fn interpolant_with(s: &Simplex, f: &ScalarField, tol: &ToleranceConfig) -> Result<AffineFunction, ApproxError> {
    check_dim(s, f)?;
    let values = vertex_values(s, f)?;
    interpolate_values(s, &values, tol)
}

fn interpolate_values(s: &Simplex, values: &[f64], tol: &ToleranceConfig) -> Result<AffineFunction, ApproxError> {
    let k = s.dim();
    let m = DMatrix::from_fn(k + 1, k + 1, |r, c| if c < k { s.vertex(r)[c] } else { 1.0 });
    let rhs = DVector::from_column_slice(values);
    let lu = m.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or(GeometryError::DegenerateSimplex { rcond: s.rcond() })?;
    // one step of iterative refinement
    let r = &rhs - &m * &sol;
    if let Some(corr) = lu.solve(&r) {
        sol += corr;
    }
    let pi = AffineFunction::new(sol.rows(0, k).iter().copied().collect(), sol[k]);
    let worst = s
        .vertices()
        .iter()
        .zip(values)
        .map(|(v, fv)| (pi.eval(v) - fv).abs() / (1.0 + fv.abs()))
        .fold(0.0, f64::max);
    if !(worst <= tol.interpolation) || !pi.is_finite() {
        return Err(ApproxError::Interpolation { residual: worst });
    }
    Ok(pi)
}

fn lattice_values<F>(lattice: &[LatticePoint], eval: F) -> Result<Vec<f64>, ApproxError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError> + Sync,
{
    let vals: Vec<Result<f64, EvalError>> = lattice.par_iter().map(|lp| eval(&lp.point)).collect();
    vals.into_iter().map(|r| r.map_err(Into::into)).collect()
}

/// Sign of `f − π` over a barycentric lattice with `grid_n` subdivisions.
pub fn secant_dominance(s: &Simplex, f: &ScalarField, grid_n: usize) -> Result<Dominance, ApproxError> {
    secant_dominance_with(s, f, grid_n, &ToleranceConfig::default())
}

pub fn secant_dominance_with(
    s: &Simplex,
    f: &ScalarField,
    grid_n: usize,
    tol: &ToleranceConfig,
) -> Result<Dominance, ApproxError> {
    let (lo, hi, scale) = secant_gap_range(s, f, grid_n, tol)?;
    let eps = tol.dominance * (1.0 + scale);
    Ok(if hi <= eps {
        Dominance::Below
    } else if lo >= -eps {
        Dominance::Above
    } else {
        Dominance::Neither
    })
}

/// `(min, max)` of `f − π` on the lattice, plus the vertex value scale.
fn secant_gap_range(
    s: &Simplex,
    f: &ScalarField,
    grid_n: usize,
    tol: &ToleranceConfig,
) -> Result<(f64, f64, f64), ApproxError> {
    check_dim(s, f)?;
    let values = vertex_values(s, f)?;
    let pi = interpolate_values(s, &values, tol)?;
    let lattice = s.lattice(grid_n.max(1));
    let gaps = lattice_values(&lattice, |x| Ok(f.eval(x)? - pi.eval(x)))?;
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi, vertex_scale(&values)))
}

/// `β″` and its witness: the minimum of `f − π` for convex `f`, the maximum
/// for concave `f`.
pub fn extremal_shift(
    s: &Simplex,
    f: &ScalarField,
    pi: &AffineFunction,
    tag: Convexity,
) -> Result<ExtremalShift, ApproxError> {
    extremal_shift_with(s, f, pi, tag, &ToleranceConfig::default())
}

pub fn extremal_shift_with(
    s: &Simplex,
    f: &ScalarField,
    pi: &AffineFunction,
    tag: Convexity,
    tol: &ToleranceConfig,
) -> Result<ExtremalShift, ApproxError> {
    check_dim(s, f)?;
    let sign = match tag {
        Convexity::Convex => 1.0,
        Convexity::Concave => -1.0,
        Convexity::Unknown => {
            return Err(ApproxError::ConvexityUnknown {
                report: Box::new(sample_convexity(f, s, 1000, DEFAULT_SEED)),
            })
        }
    };
    let values = vertex_values(s, f)?;
    let scale = vertex_scale(&values);
    let n = tol.scan_subdivisions.max(1);
    let lattice = s.lattice(n);
    // objective: sign·(f − π), minimized
    let obj = lattice_values(&lattice, |x| Ok(sign * (f.eval(x)? - pi.eval(x))))?;

    let violation_tol = tol.convexity_violation * (1.0 + scale);
    if let Some((i, &v)) = obj.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        if v > violation_tol {
            return Err(ApproxError::ConvexityViolation {
                point: lattice[i].point.clone(),
                excess: v,
            });
        }
    }

    let mut order: Vec<usize> = (0..obj.len()).collect();
    order.sort_by(|&a, &b| obj[a].total_cmp(&obj[b]));
    let separation = 2.0 / n as f64;
    let mut seeds: Vec<usize> = Vec::new();
    for &i in &order {
        if seeds.len() >= tol.descent_starts.max(1) {
            break;
        }
        let far = seeds.iter().all(|&j| {
            lattice[i]
                .gamma
                .iter()
                .zip(&lattice[j].gamma)
                .any(|(a, b)| (a - b).abs() > separation)
        });
        if far {
            seeds.push(i);
        }
    }

    let search = Descent {
        s,
        f,
        pi,
        sign,
        tol,
        scale,
    };
    let mut best: Option<(Vec<f64>, f64, usize, bool, f64)> = None;
    for &i in &seeds {
        let run = search.run(lattice[i].gamma.clone(), obj[i]);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (gamma, value, iterations, converged, stationarity) = best.expect("lattice is never empty");

    if value >= -tol.affine_zero * (1.0 + scale) {
        return Ok(ExtremalShift {
            beta_double_prime: 0.0,
            witness: s.centroid(),
            iterations,
            converged,
            stationarity,
        });
    }
    Ok(ExtremalShift {
        beta_double_prime: sign * value,
        witness: s.from_barycentric(&gamma),
        iterations,
        converged,
        stationarity,
    })
}

/// Projected gradient in barycentric coordinates with Barzilai–Borwein
/// steps and Armijo backtracking.
struct Descent<'a> {
    s: &'a Simplex,
    f: &'a ScalarField,
    pi: &'a AffineFunction,
    sign: f64,
    tol: &'a ToleranceConfig,
    scale: f64,
}

impl Descent<'_> {
    fn value(&self, gamma: &[f64]) -> f64 {
        let x = self.s.from_barycentric(gamma);
        match self.f.eval(&x) {
            Ok(v) => self.sign * (v - self.pi.eval(&x)),
            Err(_) => f64::INFINITY,
        }
    }

    fn grad(&self, gamma: &[f64]) -> Option<Vec<f64>> {
        let x = self.s.from_barycentric(gamma);
        let g = self.f.gradient_or_fd(&x).ok()?;
        let gx: Vec<f64> = g.iter().zip(&self.pi.alpha).map(|(g, a)| self.sign * (g - a)).collect();
        Some(
            self.s
                .vertices()
                .iter()
                .map(|v| v.iter().zip(&gx).map(|(a, g)| a * g).sum())
                .collect(),
        )
    }

    /// Length of the projected step with step size `tau`, an estimate of the
    /// distance to the minimizer in barycentric coordinates.
    fn stationarity(gamma: &[f64], g: &[f64], tau: f64) -> f64 {
        let trial: Vec<f64> = gamma.iter().zip(g).map(|(l, g)| l - tau * g).collect();
        project_probability_simplex(&trial)
            .iter()
            .zip(gamma)
            .map(|(p, l)| (p - l).abs())
            .fold(0.0, f64::max)
    }

    fn run(&self, mut gamma: Vec<f64>, mut value: f64) -> (Vec<f64>, f64, usize, bool, f64) {
        let improvement_tol = self.tol.descent_improvement * (1.0 + self.scale);
        // below this the objective cannot discriminate between trial points
        let noise = 8.0 * f64::EPSILON * (1.0 + self.scale + value.abs());
        let Some(mut g) = self.grad(&gamma) else {
            return (gamma, value, 0, false, f64::INFINITY);
        };
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut tau = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
        let mut stat = Self::stationarity(&gamma, &g, tau);
        let mut iterations = 0;
        let mut stalled = 0;
        let mut converged = stat <= STATIONARY;
        while !converged && iterations < self.tol.descent_max_iter {
            iterations += 1;
            let trial: Vec<f64> = gamma.iter().zip(&g).map(|(l, g)| l - tau * g).collect();
            let dir: Vec<f64> = project_probability_simplex(&trial)
                .iter()
                .zip(&gamma)
                .map(|(p, l)| p - l)
                .collect();
            let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
            let step_len = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if !(slope < 0.0) || step_len <= STATIONARY {
                converged = true;
                break;
            }
            let mut accepted = None;
            if -slope <= noise {
                // value differences are rounding noise; trust the gradient
                let cand: Vec<f64> = gamma.iter().zip(&dir).map(|(l, d)| l + d).collect();
                let v = self.value(&cand);
                if v.is_finite() {
                    accepted = Some((cand, v));
                }
            } else {
                let mut t = 1.0;
                for _ in 0..60 {
                    let cand: Vec<f64> = gamma.iter().zip(&dir).map(|(l, d)| l + t * d).collect();
                    let v = self.value(&cand);
                    if v <= value + 1e-4 * t * slope {
                        accepted = Some((cand, v));
                        break;
                    }
                    t *= 0.5;
                }
            }
            let Some((next, next_value)) = accepted else {
                converged = true;
                break;
            };
            let Some(next_g) = self.grad(&next) else {
                if next_value < value {
                    gamma = next;
                    value = next_value;
                }
                break;
            };
            let sdiff: Vec<f64> = next.iter().zip(&gamma).map(|(a, b)| a - b).collect();
            let ss: f64 = sdiff.iter().map(|v| v * v).sum();
            let sy: f64 = sdiff
                .iter()
                .zip(next_g.iter().zip(&g))
                .map(|(s, (a, b))| s * (a - b))
                .sum();
            tau = if sy > 0.0 {
                (ss / sy).clamp(1e-12, 1e12)
            } else {
                (tau * 2.0).min(1e12)
            };
            let improvement = value - next_value;
            gamma = next;
            value = next_value;
            g = next_g;
            stat = Self::stationarity(&gamma, &g, tau);
            // small improvements only end the search once the gradient agrees
            stalled = if improvement < improvement_tol { stalled + 1 } else { 0 };
            if stat <= STATIONARY || (stalled >= 2 && stat <= 1e3 * STATIONARY) {
                converged = true;
            }
        }
        (gamma, value, iterations, converged, stat)
    }
}

/// Projected-gradient step length treated as a stationary point.
const STATIONARY: f64 = 1e-13;

/// Best uniform affine approximant with the default tolerances.
pub fn best_affine(s: &Simplex, f: &ScalarField, tag: Convexity) -> Result<ApproximationResult, ApproxError> {
    best_affine_with(s, f, tag, &ToleranceConfig::default())
}

pub fn best_affine_with(
    s: &Simplex,
    f: &ScalarField,
    tag: Convexity,
    tol: &ToleranceConfig,
) -> Result<ApproximationResult, ApproxError> {
    check_dim(s, f)?;
    let (side, route) = match (tag, f.convexity()) {
        (Convexity::Unknown, Convexity::Unknown) => {
            let report = sample_convexity(f, s, 1000, DEFAULT_SEED);
            match report.verdict {
                ConvexityEvidence::Convex | ConvexityEvidence::Affine => (Convexity::Convex, Route::Sampled),
                ConvexityEvidence::Concave => (Convexity::Concave, Route::Sampled),
                ConvexityEvidence::Neither => match secant_dominance_with(s, f, tol.scan_subdivisions, tol)? {
                    Dominance::Below => (Convexity::Convex, Route::SecantDominance),
                    Dominance::Above => (Convexity::Concave, Route::SecantDominance),
                    Dominance::Neither => {
                        return Err(ApproxError::ConvexityUnknown {
                            report: Box::new(report),
                        })
                    }
                },
            }
        }
        (Convexity::Unknown, own) => (own, Route::Tagged),
        (given, _) => (given, Route::Tagged),
    };
    construct(s, f, side, route, tol)
}

/// Construction for a field already known to lie on one side of its
/// secant. Fails with [`ApproxError::NotDominated`] otherwise.
pub fn best_affine_dominated(
    s: &Simplex,
    f: &ScalarField,
    tol: &ToleranceConfig,
) -> Result<ApproximationResult, ApproxError> {
    let side = match secant_dominance_with(s, f, tol.scan_subdivisions, tol)? {
        Dominance::Below => Convexity::Convex,
        Dominance::Above => Convexity::Concave,
        Dominance::Neither => return Err(ApproxError::NotDominated),
    };
    construct(s, f, side, Route::SecantDominance, tol)
}

fn construct(
    s: &Simplex,
    f: &ScalarField,
    side: Convexity,
    route: Route,
    tol: &ToleranceConfig,
) -> Result<ApproximationResult, ApproxError> {
    let values = vertex_values(s, f)?;
    let pi = interpolate_values(s, &values, tol)?;
    let search = extremal_shift_with(s, f, &pi, side, tol)?;
    let bpp = search.beta_double_prime;
    let sigma = pi.shifted(0.5 * bpp);
    let vertex_residuals = s
        .vertices()
        .iter()
        .zip(&values)
        .map(|(v, fv)| fv - sigma.eval(v))
        .collect();
    Ok(ApproximationResult {
        sigma,
        d: 0.5 * bpp.abs(),
        witness: search.witness.clone(),
        interpolant: pi,
        beta_double_prime: bpp,
        vertex_residuals,
        convexity_used: side,
        route,
        search,
    })
}

/// `f(x) − g(x)` at every point of the lattice, in lattice order.
pub fn residual_samples(
    s: &Simplex,
    f: &ScalarField,
    g: &AffineFunction,
    grid_n: usize,
) -> Result<Vec<(LatticePoint, f64)>, ApproxError> {
    check_dim(s, f)?;
    let lattice = s.lattice(grid_n.max(1));
    let r = lattice_values(&lattice, |x| Ok(f.eval(x)? - g.eval(x)))?;
    Ok(lattice.into_iter().zip(r).collect())
}

/// Lattice estimate of `sup_Δ |f − g|`. Ties resolve to the
/// lexicographically smallest barycentric index.
pub fn residual_sup(
    s: &Simplex,
    f: &ScalarField,
    g: &AffineFunction,
    grid_n: usize,
) -> Result<ResidualReport, ApproxError> {
    let samples = residual_samples(s, f, g, grid_n)?;
    let mut best = 0;
    for (i, (_, r)) in samples.iter().enumerate() {
        if r.abs() > samples[best].1.abs() {
            best = i;
        }
    }
    let vertex_residuals = s
        .vertices()
        .iter()
        .map(|v| Ok(f.eval(v)? - g.eval(v)))
        .collect::<Result<Vec<f64>, EvalError>>()?;
    Ok(ResidualReport {
        grid_n,
        samples: samples.len(),
        sup_abs_residual: samples[best].1.abs(),
        argmax: samples[best].0.point.clone(),
        argmax_index: samples[best].0.index.clone(),
        vertex_residuals,
    })
}

//! Discrete minimax oracle: `min_{α,β} max_i |f_i − αᵀx_i − β|` over a
//! finite point set, solved by Stiefel's exchange iteration on references
//! of `k+2` points.
//!
//! The oracle shares nothing with [`crate::affine_core`] beyond the
//! [`AffineFunction`] result type; it is the independent check on the
//! secant/support construction.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::affine_core::AffineFunction;
use crate::funcspec::{EvalError, ScalarField};
use crate::geometry::Simplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error("field evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct DiscreteMinimaxProblem {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    dim: usize,
}

impl DiscreteMinimaxProblem {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, OracleError> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(OracleError::IllPosed("no points".into()));
        }
        if points.len() != values.len() {
            return Err(OracleError::IllPosed("points and values differ in length".into()));
        }
        if points.len() < dim + 2 {
            return Err(OracleError::IllPosed(format!("need at least {} points", dim + 2)));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(OracleError::IllPosed("inconsistent point dimensions".into()));
        }
        if points.iter().flatten().chain(&values).any(|v| !v.is_finite()) {
            return Err(OracleError::IllPosed("non-finite input".into()));
        }
        Ok(Self { points, values, dim })
    }

    /// Samples `f` on the barycentric lattice of `s`, plus optional extra points.
    pub fn from_lattice(s: &Simplex, f: &ScalarField, grid_n: usize, extra: &[Vec<f64>]) -> Result<Self, OracleError> {
        let mut points: Vec<Vec<f64>> = s.lattice(grid_n).into_iter().map(|lp| lp.point).collect();
        points.extend(extra.iter().cloned());
        let values = points.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>, _>>()?;
        Self::new(points, values)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn basis(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.points[i].iter().copied().chain(std::iter::once(1.0))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxSolution {
    pub function: AffineFunction,
    pub optimum: f64,
    /// Indices of the final reference (`k+2` points).
    pub reference: Vec<usize>,
    /// Residual signs on the reference.
    pub signs: Vec<i8>,
    /// Normalized dual weights `λ` with `Σ λ_j [x_j; 1] = 0`, `Σ|λ_j| = 1`.
    pub dual_weights: Vec<f64>,
    pub iterations: usize,
    /// The final max residual matched the levelled error.
    pub certified: bool,
}

struct Levelled {
    coeffs: Vec<f64>,
    h: f64,
    signs: Vec<f64>,
    lambda: Vec<f64>,
}

/// Null vector of the `n × (n+1)` matrix with columns `[x_j; 1]`, by cofactors.
fn null_vector(p: &DiscreteMinimaxProblem, reference: &[usize]) -> Vec<f64> {
    let n = p.dim + 1;
    let cols: Vec<Vec<f64>> = reference.iter().map(|&i| p.basis(i).collect()).collect();
    (0..=n)
        .map(|skip| {
            let m = DMatrix::from_fn(n, n, |r, c| {
                let col = if c < skip { c } else { c + 1 };
                cols[col][r]
            });
            let det = m.determinant();
            if skip % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

fn solve_reference(p: &DiscreteMinimaxProblem, reference: &[usize], signs: &[f64]) -> Option<Levelled> {
    let n = p.dim + 1;
    let lambda = null_vector(p, reference);
    let weight: f64 = lambda.iter().zip(signs).map(|(l, s)| l * s).sum();
    let mut lambda_scale = lambda.iter().map(|l| l.abs()).sum::<f64>();
    if !(lambda_scale > 0.0) || weight.abs() <= 1e-14 * lambda_scale {
        return None;
    }
    let a = DMatrix::from_fn(n + 1, n + 1, |r, c| {
        if c < n {
            p.basis(reference[r]).nth(c).unwrap()
        } else {
            signs[r]
        }
    });
    let rhs = DVector::from_iterator(n + 1, reference.iter().map(|&i| p.values[i]));
    let sol = a.lu().solve(&rhs)?;
    let mut h = sol[n];
    let mut signs = signs.to_vec();
    if h < 0.0 {
        h = -h;
        signs.iter_mut().for_each(|s| *s = -*s);
    }
    if weight < 0.0 {
        lambda_scale = -lambda_scale;
    }
    Some(Levelled {
        coeffs: sol.iter().take(n).copied().collect(),
        h,
        signs,
        lambda: lambda.iter().map(|l| l / lambda_scale).collect(),
    })
}

fn residual(p: &DiscreteMinimaxProblem, coeffs: &[f64], i: usize) -> f64 {
    p.values[i] - p.basis(i).zip(coeffs).map(|(b, c)| b * c).sum::<f64>()
}

/// Greedy choice of `k+1` well-spread affinely independent points plus one
/// point with all barycentric weights nonzero.
fn initial_reference(p: &DiscreteMinimaxProblem) -> Result<Vec<usize>, OracleError> {
    let k = p.dim;
    let n_pts = p.points.len();
    let centroid: Vec<f64> = (0..k)
        .map(|c| p.points.iter().map(|x| x[c]).sum::<f64>() / n_pts as f64)
        .collect();
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let first = (0..n_pts)
        .max_by(|&a, &b| {
            dist2(&p.points[a], &centroid)
                .total_cmp(&dist2(&p.points[b], &centroid))
                .then(b.cmp(&a))
        })
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let diameter = (0..n_pts)
        .map(|i| dist2(&p.points[i], &p.points[first]))
        .fold(0.0, f64::max)
        .sqrt();
    if diameter == 0.0 {
        return Err(OracleError::IllPosed("points coincide".into()));
    }
    while chosen.len() < k + 1 {
        let origin = &p.points[first];
        let off_span = |i: usize| {
            let mut v: Vec<f64> = p.points[i].iter().zip(origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            v
        };
        let (best, vec) = (0..n_pts)
            .map(|i| (i, off_span(i)))
            .max_by(|a, b| {
                let na: f64 = a.1.iter().map(|x| x * x).sum();
                let nb: f64 = b.1.iter().map(|x| x * x).sum();
                na.total_cmp(&nb).then(b.0.cmp(&a.0))
            })
            .unwrap();
        let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-10 * diameter {
            return Err(OracleError::IllPosed("points do not affinely span the space".into()));
        }
        basis.push(vec.iter().map(|x| x / norm).collect());
        chosen.push(best);
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..n_pts {
        if chosen.contains(&i) {
            continue;
        }
        let mut reference = chosen.clone();
        reference.push(i);
        let lambda = null_vector(p, &reference);
        let scale = lambda.iter().map(|l| l.abs()).fold(0.0, f64::max);
        let weakest = lambda.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min) / scale;
        if scale > 0.0 && best.is_none_or(|(_, w)| weakest > w) {
            best = Some((i, weakest));
        }
    }
    match best {
        Some((i, w)) if w > 1e-12 => {
            chosen.push(i);
            Ok(chosen)
        }
        _ => Err(OracleError::IllPosed("no reference in general position".into())),
    }
}

pub fn solve_discrete_minimax(p: &DiscreteMinimaxProblem) -> Result<MinimaxSolution, OracleError> {
    let n_pts = p.points.len();
    let value_scale = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * (1.0 + value_scale);
    let mut reference = initial_reference(p)?;
    let lambda = null_vector(p, &reference);
    let signs: Vec<f64> = lambda.iter().map(|l| l.signum()).collect();
    let mut current = solve_reference(p, &reference, &signs)
        .ok_or_else(|| OracleError::IllPosed("initial reference is singular".into()))?;

    let max_iter = 50 + 10 * n_pts;
    let mut iterations = 0;
    let mut certified = false;
    while iterations < max_iter {
        iterations += 1;
        let (worst, r_worst) =
            (0..n_pts)
                .map(|i| (i, residual(p, &current.coeffs, i)))
                .fold(
                    (0, 0.0f64),
                    |acc, (i, r)| if r.abs() > acc.1.abs() { (i, r) } else { acc },
                );
        if r_worst.abs() <= current.h + tol || reference.contains(&worst) {
            certified = r_worst.abs() <= current.h + tol;
            break;
        }
        let new_sign = r_worst.signum();
        let mut next: Option<(Vec<usize>, Levelled)> = None;
        for slot in 0..reference.len() {
            let mut cand = reference.clone();
            cand[slot] = worst;
            let mut cand_signs = current.signs.clone();
            cand_signs[slot] = new_sign;
            let lambda = null_vector(p, &cand);
            let orient = if lambda[slot] * new_sign >= 0.0 { 1.0 } else { -1.0 };
            let scale = lambda.iter().map(|l| l.abs()).fold(0.0, f64::max);
            let consistent = lambda
                .iter()
                .zip(&cand_signs)
                .all(|(l, s)| orient * l * s >= -1e-12 * scale);
            if !consistent {
                continue;
            }
            if let Some(lev) = solve_reference(p, &cand, &cand_signs) {
                if next.as_ref().is_none_or(|(_, b)| lev.h > b.h) {
                    next = Some((cand, lev));
                }
            }
        }
        match next {
            Some((r, lev)) if lev.h >= current.h - tol => {
                reference = r;
                current = lev;
            }
            _ => break,
        }
    }
    let k = p.dim;
    Ok(MinimaxSolution {
        function: AffineFunction::new(current.coeffs[..k].to_vec(), current.coeffs[k]),
        optimum: current.h,
        reference,
        signs: current.signs.iter().map(|s| *s as i8).collect(),
        dual_weights: current.lambda,
        iterations,
        certified,
    })
}

//! Builtin fields with analytic gradients and Hessians.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::{Convexity, EvalError, ScalarField};

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &["sqnorm", "neg-sqnorm", "exp-sum", "log-sum-exp", "recip"];

pub fn by_name(name: &str, k: usize) -> Option<ScalarField> {
    match name {
        "sqnorm" => Some(sqnorm(k)),
        "neg-sqnorm" => Some(sqnorm(k).scaled(-1.0)),
        "exp-sum" => Some(exp_sum(k)),
        "log-sum-exp" => Some(log_sum_exp(k)),
        "recip" if k == 1 => Some(reciprocal()),
        _ => None,
    }
}

/// `Σ x_i²`.
pub fn sqnorm(k: usize) -> ScalarField {
    ScalarField::new(k, "sqnorm", |x| Ok(x.iter().map(|v| v * v).sum()))
        .with_gradient(|x| Ok(x.iter().map(|v| 2.0 * v).collect()))
        .with_hessian(move |x| {
            Ok((0..x.len())
                .map(|i| (0..x.len()).map(|j| if i == j { 2.0 } else { 0.0 }).collect())
                .collect())
        })
        .with_convexity(Convexity::Convex)
}

/// `Σ exp(x_i)`.
pub fn exp_sum(k: usize) -> ScalarField {
    ScalarField::new(k, "exp-sum", |x| Ok(x.iter().map(|v| v.exp()).sum()))
        .with_gradient(|x| Ok(x.iter().map(|v| v.exp()).collect()))
        .with_hessian(|x| {
            Ok((0..x.len())
                .map(|i| (0..x.len()).map(|j| if i == j { x[i].exp() } else { 0.0 }).collect())
                .collect())
        })
        .with_convexity(Convexity::Convex)
}

fn softmax(x: &[f64]) -> (f64, Vec<f64>) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    (m + s.ln(), e.into_iter().map(|v| v / s).collect())
}

/// `log Σ exp(x_i)`.
pub fn log_sum_exp(k: usize) -> ScalarField {
    ScalarField::new(k, "log-sum-exp", |x| Ok(softmax(x).0))
        .with_gradient(|x| Ok(softmax(x).1))
        .with_hessian(|x| {
            let p = softmax(x).1;
            Ok((0..p.len())
                .map(|i| {
                    (0..p.len())
                        .map(|j| if i == j { p[i] - p[i] * p[j] } else { -p[i] * p[j] })
                        .collect()
                })
                .collect())
        })
        .with_convexity(Convexity::Convex)
}

/// `1/x` in one variable. Convexity depends on the side of the pole.
pub fn reciprocal() -> ScalarField {
    ScalarField::new(1, "recip", |x| {
        if x[0] == 0.0 {
            Err(EvalError::Pole)
        } else {
            Ok(1.0 / x[0])
        }
    })
    .with_gradient(|x| Ok(vec![-1.0 / (x[0] * x[0])]))
    .with_hessian(|x| Ok(vec![vec![2.0 / (x[0] * x[0] * x[0])]]))
}

/// `αᵀx + β`.
pub fn affine(alpha: &[f64], beta: f64) -> ScalarField {
    let a = alpha.to_vec();
    let g = alpha.to_vec();
    let k = alpha.len();
    ScalarField::new(k, "affine", move |x| {
        Ok(a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + beta)
    })
    .with_gradient(move |_| Ok(g.clone()))
    .with_hessian(move |_| Ok(vec![vec![0.0; k]; k]))
    .with_convexity(Convexity::Convex)
}

/// `xᵀQx + bᵀx + c` with `Q` symmetrized. Tagged convex/concave when `Q`
/// is positive/negative semidefinite.
pub fn quadratic(q: &[Vec<f64>], b: &[f64], c: f64) -> ScalarField {
    let k = b.len();
    let sym: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 0.5 * (q[i][j] + q[j][i])).collect())
        .collect();
    let eig = SymmetricEigen::new(DMatrix::from_fn(k, k, |i, j| sym[i][j])).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tag = if eig.iter().all(|&l| l >= -1e-12 * scale) {
        Convexity::Convex
    } else if eig.iter().all(|&l| l <= 1e-12 * scale) {
        Convexity::Concave
    } else {
        Convexity::Unknown
    };
    let (qe, be) = (sym.clone(), b.to_vec());
    let (qg, bg) = (sym.clone(), b.to_vec());
    let hess: Vec<Vec<f64>> = sym.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
    ScalarField::new(k, "quadratic", move |x| {
        let mut v = c;
        for i in 0..k {
            v += be[i] * x[i];
            for j in 0..k {
                v += x[i] * qe[i][j] * x[j];
            }
        }
        Ok(v)
    })
    .with_gradient(move |x| {
        Ok((0..k)
            .map(|i| bg[i] + 2.0 * (0..k).map(|j| qg[i][j] * x[j]).sum::<f64>())
            .collect())
    })
    .with_hessian(move |_| Ok(hess.clone()))
    .with_convexity(tag)
}

/// `xᵀQx + bᵀx` with `Q = BBᵀ`, `B` uniform in `[-1, 1]`, so `Q` is
/// positive semidefinite with entries in `[-k, k]`; `b` uniform in `[-2, 2]`.
pub fn random_convex_quadratic<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ScalarField {
    let b_mat: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let q: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (0..k).map(|l| b_mat[i][l] * b_mat[j][l]).sum::<f64>())
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..=2.0)).collect();
    quadratic(&q, &b, 0.0).with_convexity(Convexity::Convex)
}

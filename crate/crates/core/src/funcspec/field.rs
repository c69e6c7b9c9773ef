use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{EvalError, Expr};

type EvalFn = dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>, EvalError> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Convex,
    Concave,
    #[default]
    Unknown,
}

impl Convexity {
    pub fn flipped(self) -> Self {
        match self {
            Convexity::Convex => Convexity::Concave,
            Convexity::Concave => Convexity::Convex,
            Convexity::Unknown => Convexity::Unknown,
        }
    }
}

impl std::str::FromStr for Convexity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convex" => Ok(Convexity::Convex),
            "concave" => Ok(Convexity::Concave),
            "unknown" => Ok(Convexity::Unknown),
            other => Err(format!("unknown convexity {other:?}")),
        }
    }
}

/// A scalar field on k-space with optional analytic derivatives.
///
/// Evaluators are pure closures; cloning shares them.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: String,
    eval: Arc<EvalFn>,
    gradient: Option<Arc<GradFn>>,
    hessian: Option<Arc<HessFn>>,
    convexity: Convexity,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("convexity", &self.convexity)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(dim: usize, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            eval: Arc::new(eval),
            gradient: None,
            hessian: None,
            convexity: Convexity::Unknown,
        }
    }

    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        let label = expr.to_string();
        Self::new(dim, label, move |x| expr.eval(x))
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian<H>(mut self, h: H) -> Self
    where
        H: Fn(&[f64]) -> Result<Vec<Vec<f64>>, EvalError> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_convexity(mut self, tag: Convexity) -> Self {
        self.convexity = tag;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let v = (self.eval)(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Result<Vec<f64>, EvalError>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn hessian(&self, x: &[f64]) -> Option<Result<Vec<Vec<f64>>, EvalError>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    /// Analytic gradient when available, central differences otherwise.
    pub fn gradient_or_fd(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self.gradient(x) {
            Some(g) => g,
            None => super::finite_diff_gradient(self, x, None),
        }
    }

    /// `c·f`; the convexity tag flips for negative `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        let g_inner = self.clone();
        let h_inner = self.clone();
        let mut out = Self::new(self.dim, format!("{c}*({})", self.label), move |x| {
            Ok(c * inner.eval(x)?)
        });
        if self.gradient.is_some() {
            out = out.with_gradient(move |x| {
                let g = g_inner.gradient(x).expect("gradient present")?;
                Ok(g.into_iter().map(|v| c * v).collect())
            });
        }
        if self.hessian.is_some() {
            out = out.with_hessian(move |x| {
                let h = h_inner.hessian(x).expect("hessian present")?;
                Ok(h.into_iter().map(|r| r.into_iter().map(|v| c * v).collect()).collect())
            });
        }
        out.convexity = match c {
            c if c > 0.0 => self.convexity,
            c if c < 0.0 => self.convexity.flipped(),
            _ => Convexity::Convex,
        };
        out
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.clone();
        let mut out = Self::new(self.dim, format!("({}) + {c}", self.label), move |x| {
            Ok(inner.eval(x)? + c)
        });
        out.gradient = self.gradient.clone();
        out.hessian = self.hessian.clone();
        out.convexity = self.convexity;
        out
    }
}

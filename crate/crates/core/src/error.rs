use thiserror::Error;

use crate::affine_core::ApproxError;
use crate::cheb1d::ChebError;
use crate::convexity::ConvexityError;
use crate::funcspec::{EvalError, ParseError};
use crate::geometry::GeometryError;
use crate::oracle::OracleError;
use crate::warp::WarpError;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed files, expressions, degenerate geometry.
    Validation,
    /// Well-formed input on which the computation cannot proceed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Cheb(#[from] ChebError),
    #[error(transparent)]
    Convexity(#[from] ConvexityError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Geometry(_) | Error::Parse(_) => ErrorKind::Validation,
            Error::Eval(_) | Error::Oracle(_) => ErrorKind::Numerical,
            Error::Approx(e) => approx_kind(e),
            Error::Cheb(e) => match e {
                ChebError::EmptyInterval { .. } | ChebError::Geometry(_) => ErrorKind::Validation,
                ChebError::Approx(a) => approx_kind(a),
                _ => ErrorKind::Numerical,
            },
            Error::Convexity(e) => match e {
                ConvexityError::SingularHomography { .. } | ConvexityError::Json(_) | ConvexityError::Geometry(_) => {
                    ErrorKind::Validation
                }
                _ => ErrorKind::Numerical,
            },
            Error::Warp(e) => match e {
                WarpError::Image(_) | WarpError::Io(_) | WarpError::Geometry(_) | WarpError::SingularMap => {
                    ErrorKind::Validation
                }
                WarpError::Convexity(c) => Error::Convexity(c.clone()).kind(),
                _ => ErrorKind::Numerical,
            },
        }
    }
}

fn approx_kind(e: &ApproxError) -> ErrorKind {
    match e {
        ApproxError::Geometry(_) | ApproxError::DimensionMismatch { .. } => ErrorKind::Validation,
        _ => ErrorKind::Numerical,
    }
}

//! Best uniform (minimax) affine approximation of convex or concave scalar
//! fields over simplices, and its use for linearizing planar homographies.
//!
//! The central routine is [`affine_core::best_affine`]: it interpolates the
//! field at the simplex vertices, finds the parallel supporting hyperplane by
//! minimizing (or maximizing) the residual against that interpolant, and
//! returns the midplane between the two, which equioscillates at the
//! vertices and at the touching point.
//!
//! Modules:
//! - [`geometry`]: simplices, barycentric coordinates, lattices.
//! - [`funcspec`]: scalar fields, expression grammar, builtin catalog.
//! - [`affine_core`]: the secant/support/midplane construction.
//! - [`cheb1d`]: the interval case and an equioscillation verifier.
//! - [`convexity`]: homography components, canonical rational form, Hessian
//!   classification and region partition.
//! - [`warp`]: exact, best-affine and Taylor warps plus PPM I/O.
//! - [`oracle`]: discrete minimax solver by exchange iteration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine_core;
pub mod cheb1d;
pub mod convexity;
mod error;
pub mod funcspec;
pub mod geometry;
pub mod oracle;
mod tolerance;
pub mod warp;

pub use error::{Error, ErrorKind};
pub use tolerance::ToleranceConfig;

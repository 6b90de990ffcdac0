//! Numerical construction and verification of saddle-shaped solutions, layer
//! solutions and odd eigenpairs for nonlocal semilinear equations
//! `L_K u = f(u)` with radial kernels comparable to the fractional Laplacian.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod eigen;
pub mod error;
pub mod interp;
pub mod layer1d;
pub mod kernels;
pub mod operator;
pub mod parabolic;
pub mod quad;
pub mod radial_geometry;
pub mod saddle;
pub mod special;
pub mod verify;

pub use error::{Error, Result};

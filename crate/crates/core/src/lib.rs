//! Numerical laboratory for the one-dimensional stochastic heat equation
//! driven by noise that is white in time and fractional in space with
//! Hurst parameter H in (1/4, 1/2).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::excessive_precision)]

pub mod analysis;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod kernel;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use gaussian::{GaussianField, PointSet};
pub use noise::{HurstParameter, NoiseRealization, SpaceTimeGrid};
pub use quad::{Estimate, Quad};

//! Pulse propagation through randomly layered media with long-range correlations.
//!
//! The crate covers the whole chain: Gaussian field synthesis (fGn, coupled
//! multi-index spectral fields), Hermite transforms, ε-scaled media, the 2×2
//! transfer-matrix propagator, pulse reconstruction, simulation of the limit
//! processes, and the estimators used to compare them.

// NaN-rejecting checks are written as !(x > 0.0) on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian_field;
pub mod hermite;
pub mod io;
pub mod limits;
pub mod medium;
pub mod profile;
pub mod propagator;
pub mod pulse;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use trajectory::Trajectory;

//! Invertible Gaussian reparameterization (IGR) of discrete distributions.
//!
//! Gaussian noise is pushed through an invertible map onto the open simplex,
//! which gives a reparameterizable relaxation with an exact density and a
//! closed-form KL divergence between members sharing the same map. The crate
//! also provides a Gumbel-Softmax baseline, recovery of the relaxed discrete
//! distribution, truncation for countably infinite supports, and gradient
//! estimators with a finite-difference checker.
//!
//! Categories are zero-based throughout; for a relaxation over `K`
//! categories the remainder coordinate `1 - Σ z` is category `K - 1`.

#![forbid(unsafe_code)]

pub mod distributions;
pub mod error;
pub mod estimate;
pub mod infinite;
pub mod recovery;
pub mod simplex;
pub mod special;
pub mod transforms;

pub use error::{Error, Result};
pub use simplex::SimplexInterior;

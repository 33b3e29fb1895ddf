//! Exact computational machinery around anticoncentration of polynomials of
//! random signs: Gaussian-rational linear algebra, tensor reducibility
//! testing and constructive repair, point-probability computation, decoupling
//! verifiers, and symmetric generalized arithmetic progressions.
//!
//! Everything numerical is exact rational arithmetic; floating point appears
//! only in confidence intervals and timing output. All randomized procedures
//! are deterministic functions of a 64-bit seed.

pub mod anticonc;
pub mod caps;
pub mod combin;
pub mod constructions;
pub mod decoupling;
pub mod error;
pub mod exec;
pub mod fractions;
pub mod gap;
pub mod matrix;
pub mod rat;
pub mod repair;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tensor;
pub mod testers;

pub use caps::Caps;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rat::Rat;
pub use scalar::Scalar;
pub use tensor::{AxisPartition, Tensor};

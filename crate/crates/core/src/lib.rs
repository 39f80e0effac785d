//! Identifiability tools for bilinear inverse problems.
//!
//! A bilinear map `B: ℂ^{n₁} × ℂ^{n₂} → ℂ^m` is handled through its lifting
//! `M(u vᵗ) = B(u, v)`, a linear map on `n₁ × n₂` matrices. The modules build
//! such maps (dense, structured, and circular-deconvolution), estimate the
//! dimension of sparse rank-one difference sets, search for counterexamples
//! to injectivity, and recover signals up to the scaling ambiguity.

pub mod certify;
pub mod convolution;
mod error;
pub mod lifting;
pub mod models;
pub mod numerics;
pub mod recover;
mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;

//! Subspace methods for line-spectral (frequency / direction-of-arrival)
//! estimation from multi-snapshot array data.
//!
//! The crate covers the whole estimation chain:
//!
//! * [`numerics`]: dense complex kernels (Hermitian eigensolver, SVD,
//!   pseudo-inverse, general eigenvalues) and subspace geometry.
//! * [`model`]: scenario description and seeded synthetic data under
//!   circular complex Gaussian sources and noise, including coherent groups.
//! * [`smoothing`]: forward-only and forward-backward spatial smoothing.
//! * [`estimators`]: signal-subspace extraction, ESPRIT, MUSIC and the
//!   composed pipelines.
//! * [`metrics`]: matched wrap-around distance, separation and resolution.
//! * [`bounds`]: closed-form perturbation, subspace, frequency-error and
//!   Hadamard-product eigenvalue bounds, evaluated as plain numbers.
//!
//! The crate is `no_std` and only needs `alloc`. IO, the command line and
//! the Monte Carlo harness live in the companion `esprit-lab` crate.
//!
//! ## Cargo features
//!
//! * `serde`: derive `Serialize`/`Deserialize` for scenario descriptions,
//!   estimation results and bound reports.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
mod error;
pub mod estimators;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod smoothing;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

//! Numerical toolkit for the quantum Fisher information of a twin-beam
//! (frequency-entangled) Doppler lidar and its coherent-state benchmark.
//!
//! * [`spectral`]: Hermite functions, the double-Gaussian JSA, Schmidt modes,
//!   Doppler kinematics.
//! * [`qfi_quantum`]: exact QFI series, photon number, duration, regimes.
//! * [`qfi_classical`]: coherent-state QFI.
//! * [`gaussian`]: Gaussian-state moments, symplectic maps, QFI/SLD and the
//!   photon-loss pipeline.
//! * [`measurement`]: frequency-resolved photon counting, sampling and
//!   maximum-likelihood checks of the Cramer-Rao bound.
//! * [`cli`]: the `qlidar` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gaussian;
pub mod measurement;
pub mod qfi_classical;
pub mod qfi_quantum;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::SpectralParams;

//! Quantum Fisher information bounds for lidar ranging and velocimetry with Gaussian
//! single-photon and entangled two-photon probes.
//!
//! The layers, bottom to top:
//! - [`gaussian_optics`]: pulse and pair-state models, the delay/Doppler channel, overlaps.
//! - [`metrology_engine`]: SLDs, QFI matrices, commutators, reparameterisation and a
//!   brute-force oracle over any [`metrology_engine::StateFamily`].
//! - [`single_target`], [`two_target`]: closed forms for one and two targets.
//! - [`measurement_sim`]: the frequency-Hadamard and joint time–frequency measurements,
//!   shot sampling and maximum-likelihood estimation.
//! - [`cli_runner`]: configuration, sweeps, output and the `verify` gate.

pub mod cli_runner;
pub mod error;
pub mod families;
pub mod gaussian_optics;
pub mod linalg;
pub mod measurement_sim;
pub mod metrology_engine;
pub mod quadrature;
pub mod single_target;
pub mod two_target;

pub use error::{Error, Result};
pub use families::{FamilyRegistry, FamilySettings};
pub use gaussian_optics::{GaussianPulse, TargetKinematics, TwoPhotonState, TwoTargetScene};
pub use metrology_engine::{DensityOperator, HermitianOperator, QfiReport, StateFamily};

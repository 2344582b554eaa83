//! Periodically driven open quantum systems under a thermodynamically
//! consistent GKLS master equation.
//!
//! The dissipator is rebuilt from the instantaneous eigenbasis of the
//! Hamiltonian, so its fixed point follows the instantaneous Gibbs state.
//! The crate provides
//!
//! * [`specmat`]: Hermitian eigendecomposition, gauge tracking and state metrics;
//! * [`thermo`]: energy-resolved jump operators, KMS rates and the dissipator;
//! * [`liouville`]: the block-structured generator in the moving eigenbasis;
//! * [`expansion`]: the slow-driving expansion of the limit cycle;
//! * [`cd`]: the adiabatic gauge potential and counterdiabatic term;
//! * [`twolevel`]: closed forms for the driven qubit;
//! * [`engine`]: time integration, scans, expansion tables and self-validation.
//!
//! Runnable walkthroughs live in `examples/`, one per capability.

pub mod cd;
pub mod engine;
pub mod error;
pub mod expansion;
pub mod liouville;
pub mod protocol;
pub mod specmat;
pub mod thermo;
pub mod twolevel;

pub use error::{Error, Result};
pub use protocol::{BlochPath, MatrixPath, PeriodicFn, Protocol};
pub use specmat::{CMatrix, DensityMatrix, HermitianOperator, SpectralDecomposition};
pub use thermo::{Bath, RateFunction};

//! Simulation engine: config files, time integration, frequency and gap
//! scans, expansion tables and the self-validation suite.

pub mod config;
pub mod expand;
pub mod integrate;
pub mod output;
pub mod scan;
pub mod validate;

pub use config::{IntegratorConfig, ProtocolConfig, RateConfig, SimConfig};
pub use expand::{expand, ExpandRow, ExpandTable};
pub use integrate::{integrate, Diagnostics, Dynamics, Trajectory};
pub use scan::{scan, ScanAxis, ScanRow};
pub use validate::{validate, Injection, Report, ValidateOptions};

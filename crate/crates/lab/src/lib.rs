//! Experiment runner: configuration, scenario drivers and diagnostics
//! output for the `dnls` library.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod perturbation;
pub mod scenarios;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};

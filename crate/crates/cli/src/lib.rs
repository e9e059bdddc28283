//! Experiment harness on top of `riesz-core`: sharpness sweeps, stability
//! batteries, reduction runs, spectral tables and inequality certification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod config;
pub mod error;
pub mod families;
pub mod reduce;
pub mod report;
pub mod spectral;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, Overrides, SetFamily, Tolerances};
pub use error::{exit, CliError, Result};
pub use report::Envelope;

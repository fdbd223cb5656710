//! Batch driver for the affine lattice field theory: configuration parsing and
//! the CSV-producing suites.

pub mod commands;
pub mod config;

pub use commands::{run_suite, Outcome, RunError};
pub use config::{ConfigError, RunConfig};

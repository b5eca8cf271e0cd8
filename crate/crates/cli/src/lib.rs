//! Experiment driver for the `fpsolve` command-line tool.

pub mod commands;
pub mod config;

pub use commands::{CliError, CliResult};
pub use config::{ConfigError, ExperimentConfig};

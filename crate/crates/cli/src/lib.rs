//! Command-line runner for the physics-constrained network experiments.

pub mod config;
pub mod error;
pub mod experiment;
pub mod svg;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentReport};

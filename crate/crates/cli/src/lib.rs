//! Command-line front end: experiment configuration, grid runs, feature
//! ranking, reports and batch prediction.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{CliError, EXIT_CELL_FAILURES, EXIT_INPUT, EXIT_OK};

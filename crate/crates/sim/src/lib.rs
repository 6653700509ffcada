//! Instance files, run configuration, the parallel experiment runner and
//! CSV/JSON output for the `cim-core` simulator. The `cim` binary wraps these.

pub mod config;
pub mod error;
pub mod format;
pub mod output;
pub mod runner;

pub use config::{Mode, OutputFormat, PerturbationSetting, RunConfig};
pub use error::CliError;
pub use format::{read_instance, write_instance, FormatError};
pub use runner::{bench, solve_instance, BenchReport, InstanceOutcome};

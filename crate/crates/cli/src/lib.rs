//! Command-line front end for `treedg`: declarative run configs, runs,
//! convergence studies, PID benchmarks and file exports.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod setup;

pub use bench::{bench, pid, BenchReport};
pub use commands::{config_from_output, convergence, export, run, simulate, ConvergenceReport, RunSummary};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

//! Experiment runner: declarative configs, report writers and the
//! subcommands of the `cfextract` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{ArchMode, Cell, ExperimentConfig, Grid, TargetSpec};
pub use error::{CliError, Result};
pub use report::ReportRow;

//! Command-line driver: reads a JSON configuration, runs one experiment and
//! writes a CSV table, a metadata sidecar and a run log.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use app::{run, Cli, Experiment};
pub use config::LabConfig;
pub use error::CliError;
pub use table::{emit_csv, Cell, ResultTable};

//! Command-line front end: run configurations, subcommands and report
//! documents.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_analyze, cmd_fit, cmd_simulate, cmd_spectrum, AnalyzeReport, Sink, SpectrumRow, Status};
pub use config::{parse_window, RunConfig};
pub use error::{CliError, Diagnostic};

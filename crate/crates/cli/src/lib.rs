//! Library behind the `sbc` command-line tool.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult, Stage};

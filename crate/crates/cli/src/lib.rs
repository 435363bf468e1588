//! Command-line pipeline around the condensation library: dataset
//! ingestion, configuration, checkpointing, and the user-facing commands.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod textio;

pub use error::{CliError, CliResult};

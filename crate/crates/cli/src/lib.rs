//! Batch front-end for `spinsep`: configuration parsing, the four commands
//! and their output files.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, write_outputs, OutputFile, RunOutput};
pub use config::{Command, Initial, RunConfig};
pub use error::CliError;

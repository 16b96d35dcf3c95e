//! Command-line front end: configuration parsing, CSV output and the
//! `simulate`, `verify` and `report` commands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;

pub use error::{CliError, CliResult};

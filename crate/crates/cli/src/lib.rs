//! Command-line front end: configuration, orchestration and output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Cli, Command};
pub use config::{parse_config, RunConfig};
pub use error::CliError;

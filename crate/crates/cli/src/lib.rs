//! Command-line harness for Palm-likelihood studies: TOML configuration,
//! pattern and raster ingestion, replicate orchestration and report files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod run;

pub use commands::{execute, run_command, Command};
pub use config::RunConfig;
pub use error::{CliError, Result};

//! Command-line driver for `ammfee-core`: TOML configuration, solver runs,
//! parallel simulation batches and CSV exports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod figures;
pub mod pipeline;

pub use cli::run_command;
pub use config::RunConfig;
pub use error::CliError;

//! Experiment driver for the `symtube` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;

pub use config::RunConfig;
pub use error::CliError;

//! Configuration-driven front end for the `lasercond` simulator.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{criterion, darkstates, hysteresis, prepare, simulate, Prepared, RunOptions};
pub use config::RunConfig;
pub use error::CliError;

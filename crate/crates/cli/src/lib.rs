//! Command-line front end: dataset synthesis, training, cross-validation,
//! headless runs and benchmarks, log replay, and the live websocket
//! session.

pub mod args;
pub mod commands;
pub mod error;
pub mod serve;

pub use args::{Cli, Command};
pub use commands::execute;
pub use error::{CliError, CliResult};

//! File formats, the repair pipeline and the benchmark harness behind the
//! `flipfix` command.

pub mod bench;
pub mod config;
pub mod error;
pub mod gen;
pub mod repair;
pub mod report;

pub use error::{CliError, Result};

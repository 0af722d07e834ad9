//! Command-line harness for `resilience-core`: configuration, parallel
//! evaluation, and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod harness;
pub mod io;

pub use commands::{run, Cli, Command};
pub use config::RunConfig;
pub use harness::{Harness, ParetoRow, PointResult, PointSetup};

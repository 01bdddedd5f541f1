//! Configuration and sweep driver behind the `ifem` binary.

pub mod config;
pub mod run;

pub use config::{build, example, help_text, ConfigError, RunConfig};
pub use run::{run, RunError, RunSummary};

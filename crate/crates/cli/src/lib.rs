//! Command-line scenario runner.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{RunConfig, ScenarioKind};
pub use error::CliError;

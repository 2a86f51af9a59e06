//! Configuration loading and scenario execution for the `powerbound` binary.

pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, ConfigIssue, RunConfig, Tolerances, DEFAULT_CONFIG};
pub use runner::{run, sweep, with_param, RunError, RunReport, ScenarioRecord, SweepReport};

//! Scenario runner for near-field predictive beamforming: configuration,
//! the closed tracking loop, Monte Carlo and sweep experiments, and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod scenario;

pub use config::{ConfigError, ScenarioConfig};
pub use scenario::{run_nfpb, RunOutput, RunRecord};

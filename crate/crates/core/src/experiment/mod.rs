//! Configuration-driven experiment runs, grid tuning and report rendering.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Preset};
pub use runner::{rerender, run, tune, RunSummary, TuneSummary};

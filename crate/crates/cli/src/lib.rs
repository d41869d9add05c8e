//! Experiment runner behind the `lrwave` binary.

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{ExperimentConfig, Mode};
pub use manifest::RunManifest;
pub use run::{run, RunOutcome};

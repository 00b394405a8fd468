//! Batch runner behind the `expsieve` binary: config parsing, experiment
//! pipelines, run manifests and their verification.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use manifest::{verify, RunManifest};
pub use run::{run, RunOptions};

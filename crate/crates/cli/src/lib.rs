//! Reproducible experiment runner for lrplab.

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Kind, Overrides};
pub use report::report;
pub use run::{run, verify, RunManifest};

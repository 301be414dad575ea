//! Experiment harness around `mfqr-core`: configuration, CSV input and
//! output, the replicate runner, per-replicate manifests, reports and SVG plots.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod runner;
pub mod simulate;
pub mod svg;

pub use config::{ExperimentConfig, Seeds};
pub use error::{AppError, AppResult};

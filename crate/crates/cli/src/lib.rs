//! Configuration, experiment registry and artifact writing for the
//! `homoglab` command-line tool.

pub mod config;
pub mod output;
pub mod registry;
pub mod table;

pub use config::{validate, ExperimentConfig, ValidationReport, Violation};
pub use output::{run, Overrides, RunSummary, PARTIAL_MARKER};
pub use registry::{experiment_names, lookup, Experiment, ExperimentOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },

    #[error(transparent)]
    Run(#[from] homoglab::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

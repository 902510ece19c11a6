//! Scenario runner and sweep engine for the optomechanical SSH lattice.
//!
//! Each named scenario fixes a parameter set, runs the solver pipeline, and
//! writes CSV files plus a `manifest.json` with checksums into an output
//! directory. The CSV schemas are the interface used by external plotting.

pub mod catalog;
pub mod config;
pub mod manifest;
pub mod overrides;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

pub use catalog::{scenario, Pipeline, ScenarioSettings, ScheduleKind, SCENARIOS};
pub use config::{load_config, ConfigFile, Scenario, ScenarioConfig};
pub use manifest::{verify_manifest, Manifest, OutputEntry};
pub use run::{run_resolved, run_scenario};
pub use sweep::{run_sweep, Observable, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: omtopo_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn solver(context: impl Into<String>) -> impl FnOnce(omtopo_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Solver { context, source }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

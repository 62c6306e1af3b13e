//! Experiment driver for the `rbm-gbc` binary: configuration, seeding,
//! result persistence and acceptance checks.

pub mod config;
pub mod experiments;
pub mod output;

use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, RunArgs};
pub use output::{RunManifest, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for anything the user can fix by changing the invocation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<rbm_gbc::Error> for CliError {
    fn from(e: rbm_gbc::Error) -> Self {
        use rbm_gbc::Error as E;
        match e {
            E::Dimension(_)
            | E::DimensionMismatch { .. }
            | E::ChartDomain(_)
            | E::UnknownModel { .. }
            | E::Unsupported { .. }
            | E::OffLine { .. }
            | E::TooCoarse(..)
            | E::Invalid(_)
            | E::PatodiScope { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One acceptance check; `name` is the invariant being tested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// What an experiment produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub report: serde_json::Value,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub checks: Vec<Check>,
    pub manifest: RunManifest,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Runs the configured experiment and writes its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let started = output::timestamp();
    let outcome = experiments::run_experiment(config)?;
    let report = serde_json::json!({
        "experiment": config.experiment.name(),
        "model": config.model,
        "seed": config.seed,
        "checks": outcome.checks,
        "results": outcome.report,
    });
    let manifest = output::write_artifacts(config, &outcome.tables, &report, started)?;
    Ok(RunSummary {
        checks: outcome.checks,
        manifest,
    })
}

/// The registry as a text table: name, dimension, known χ.
pub fn list_models() -> String {
    let mut s = format!("{:<12} {:>3} {:>3}\n", "name", "dim", "chi");
    for m in rbm_gbc::geometry::ManifoldModel::registry() {
        let chi = m.euler_characteristic().map_or("-".to_string(), |c| c.to_string());
        s.push_str(&format!("{:<12} {:>3} {:>3}\n", m.name(), m.dim(), chi));
    }
    s
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

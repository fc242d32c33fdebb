//! Experiment front end: configuration, single runs, parallel μ sweeps,
//! mean-field tables and simulation/theory verdicts, all written as CSV.

pub mod compare;
pub mod config;
pub mod simulate;
pub mod sweep;
pub mod theory;

pub use compare::{cmd_compare, compare, Regime, Verdict, VerdictRow};
pub use config::{ExperimentConfig, Preset, SweepGrid};
pub use simulate::{cmd_simulate, measure};
pub use sweep::{cmd_sweep, sweep_rows, Metric, SweepRow};
pub use theory::{cmd_gap_chain, cmd_solve_boltzmann, cmd_theory, BoltzmannReport};

use santafe_core::{ParamError, SimError, TheoryError};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("market-order grids differ between the simulation and theory tables")]
    GridMismatch,
    #[error("{0} has no data rows")]
    EmptyInput(String),
}

/// Writes `contents` to `dir/name`, creating `dir` when needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io(&path))?;
    Ok(path)
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the resolved configuration next to the results.
pub fn echo_config(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    write_output(&config.out_dir, "config.txt", &config.to_text())
}

pub(crate) fn parse_field(path: &str, line: usize, s: &str) -> Result<Option<f64>, CliError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| CliError::Parse {
        path: path.to_string(),
        message: format!("line {line}: bad number `{s}`"),
    })
}

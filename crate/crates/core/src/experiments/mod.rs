//! Experiment pipelines behind the CLI: JSON configuration, per-scenario
//! runners, CSV/JSON emission and verdicts.

mod config;
mod runners;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{
    derived_seed, Estimator, ExperimentConfig, GridConfig, HypothesisConfig, RateSource, Scenario, SolverConfig,
    Tolerances, Truncation,
};
pub use runners::{
    run_bm_experiment, run_equilibrium_experiment, run_ldp_experiment, run_ratio_experiment, run_sample_experiment,
    QUADRATURE_ORDER,
};

use crate::error::{Error, Result};

/// One named pass/fail check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: &str, pass: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Verdict {
            id: id.to_string(),
            pass,
            value,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub scenario: Scenario,
    pub verdicts: Vec<Verdict>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

impl ExperimentOutcome {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }
}

/// Exit code for a failed run: 2 for a named hypothesis violation, 3 otherwise.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::HypothesisViolation { .. } => 2,
        _ => 3,
    }
}

/// Output directory: `out` if given, else the config's `output_dir`.
pub fn resolve_output_dir(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    match (out, &config.output_dir) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(p)) => Ok(p.clone()),
        (None, None) => Err(Error::Config("no output directory (use --out or output_dir)".into())),
    }
}

/// Dispatch on `config.scenario` and write `verdicts.json` into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let mut outcome = match config.scenario {
        Scenario::Equilibrium => run_equilibrium_experiment(config, out)?,
        Scenario::Sample => run_sample_experiment(config, out)?,
        Scenario::Ldp => run_ldp_experiment(config, out)?,
        Scenario::Ratio => run_ratio_experiment(config, out)?,
        Scenario::Bm => run_bm_experiment(config, out)?,
    };
    outcome.files.push("verdicts.json".into());
    write_json(&out.join("verdicts.json"), &outcome)?;
    Ok(outcome)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

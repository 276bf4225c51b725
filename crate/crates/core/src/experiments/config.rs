use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainGrid, Window};
use crate::ensembles::FitModel;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::potential::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Equilibrium,
    Sample,
    Ldp,
    Ratio,
    Bm,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Equilibrium => "equilibrium",
            Scenario::Sample => "sample",
            Scenario::Ldp => "ldp",
            Scenario::Ratio => "ratio",
            Scenario::Bm => "bm",
        }
    }
}

/// Unbounded `Y` replaced by a truncated line or plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Line,
    Plane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Node count on the line, lattice side in the plane.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub truncate: Option<Truncation>,
    /// Multiply every tau mass by this factor.
    #[serde(default = "one")]
    pub tau_scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            resolution: default_resolution(),
            truncate: None,
            tau_scale: 1.0,
        }
    }
}

fn default_resolution() -> usize {
    60
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: default_max_iters(),
            gap_tol: default_gap_tol(),
        }
    }
}

fn default_max_iters() -> usize {
    50_000
}

fn default_gap_tol() -> f64 {
    1e-8
}

/// Pass/fail bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative gap between fitted and predicted rate.
    #[serde(default = "default_ldp_gap")]
    pub ldp_relative_gap: f64,
    /// Standard errors allowed for a rate that should vanish.
    #[serde(default = "default_degenerate_se")]
    pub degenerate_se: f64,
    /// Predicted rates below this count as zero.
    #[serde(default = "default_zero_rate")]
    pub zero_rate: f64,
    /// Relative gap of `(1/n) log h_n` to `-rho beta` at the last `n`.
    #[serde(default = "default_ratio_gap")]
    pub ratio_relative_gap: f64,
    /// Relative gap of `(1/n^2) log Z_n` to `-(beta/2) E`; absolute when the target is 0.
    #[serde(default = "default_scaling_gap")]
    pub scaling_gap: f64,
    /// Largest KKT residual accepted from the solver.
    #[serde(default = "default_kkt")]
    pub kkt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ldp_relative_gap: default_ldp_gap(),
            degenerate_se: default_degenerate_se(),
            zero_rate: default_zero_rate(),
            ratio_relative_gap: default_ratio_gap(),
            scaling_gap: default_scaling_gap(),
            kkt: default_kkt(),
        }
    }
}

fn default_ldp_gap() -> f64 {
    0.15
}
fn default_degenerate_se() -> f64 {
    2.0
}
fn default_zero_rate() -> f64 {
    1e-3
}
fn default_ratio_gap() -> f64 {
    0.10
}
fn default_scaling_gap() -> f64 {
    0.15
}
fn default_kkt() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Fraction of sweeps with `z_1` in `W`.
    Hits,
    /// Fraction of coordinates in `W`.
    Exchangeable,
    /// Chain average of the conditional probability.
    Conditional,
}

/// Where the predicted rate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Closed form for radial fields on centred discs, solver otherwise.
    Auto,
    Solver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisConfig {
    /// Run the Bernstein–Markov sequence before sampling.
    #[serde(default = "yes")]
    pub check_bm: bool,
    #[serde(default = "default_bm_grid")]
    pub bm_n_grid: Vec<usize>,
    /// Exponent `a` for the tail integrability check; defaults to dimension + 1.
    #[serde(default)]
    pub tail_exponent: Option<f64>,
    /// Replace `Q` by `(beta/2) V` of the solved problem before sampling.
    #[serde(default)]
    pub contact_counterexample: bool,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig {
            check_bm: true,
            bm_n_grid: default_bm_grid(),
            tail_exponent: None,
            contact_counterexample: false,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_bm_grid() -> Vec<usize> {
    vec![10, 20, 30]
}

/// One experiment, read from JSON. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub field: FieldSpec,
    /// `Y`; omitted when `grid.truncate` is set.
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "all")]
    pub window: Window,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    /// Sweeps between conditional evaluations (and between `h_n` integrand evaluations).
    #[serde(default = "default_every")]
    pub evaluate_every: usize,
    #[serde(default = "default_fit")]
    pub fit_model: FitModel,
    #[serde(default = "default_rate_source")]
    pub rate_source: RateSource,
    #[serde(default)]
    pub hypotheses: HypothesisConfig,
    /// Ratio scenario: telescope `log Z_n` from the exact `n = 2` value over
    /// every `n` up to the largest in `n_grid`.
    #[serde(default)]
    pub telescope: bool,
    /// Bm scenario: `n` values for the tail-mass fit (empty = skip).
    #[serde(default)]
    pub tail_n_grid: Vec<usize>,
    #[serde(default = "default_tail_cells")]
    pub tail_dilation_cells: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Snapshot spacing for the sample scenario (0 = none).
    #[serde(default)]
    pub snapshot_every: usize,
}

fn all() -> Window {
    Window::All
}
fn default_estimator() -> Estimator {
    Estimator::Conditional
}
fn default_every() -> usize {
    10
}
fn default_fit() -> FitModel {
    FitModel::LogPrefactor
}
fn default_rate_source() -> RateSource {
    RateSource::Auto
}
fn default_tail_cells() -> usize {
    10
}
fn default_trials() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        match (&self.domain, self.grid.truncate) {
            (Some(d), None) => d.validate()?,
            (None, Some(_)) => {
                if self.field.superlog_b.is_none() {
                    return Err(Error::Config("truncated domains need field.superlog_b".into()));
                }
            }
            (Some(_), Some(_)) => return Err(Error::Config("give either domain or grid.truncate, not both".into())),
            (None, None) => return Err(Error::Config("domain missing".into())),
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.n_grid.first() == Some(&0) {
            return Err(Error::Config("n_grid entries must be positive".into()));
        }
        if !(self.grid.tau_scale > 0.0) {
            return Err(Error::Config("grid.tau_scale must be positive".into()));
        }
        let needs_chains = matches!(self.scenario, Scenario::Sample | Scenario::Ldp | Scenario::Ratio);
        if needs_chains {
            if self.n_grid.is_empty() {
                return Err(Error::Config("n_grid is empty".into()));
            }
            if self.seeds.is_empty() {
                return Err(Error::Config("seeds are empty".into()));
            }
            let burn = self.chain_options(0).burn_in();
            if self.sweeps <= burn {
                return Err(Error::Config(format!("sweeps ({}) must exceed burn_in ({burn})", self.sweeps)));
            }
        }
        if self.scenario == Scenario::Bm && self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<DomainGrid> {
        let res = self.grid.resolution;
        let b = self.field.superlog_b.unwrap_or(1.0);
        let grid = match (self.grid.truncate, &self.domain) {
            (Some(Truncation::Line), _) => DomainGrid::truncated_line(&self.field, b, res)?,
            (Some(Truncation::Plane), _) => DomainGrid::truncated_plane(&self.field, b, res)?,
            (None, Some(d)) => DomainGrid::cells(d, res)?,
            (None, None) => return Err(Error::Config("domain missing".into())),
        };
        Ok(if self.grid.tau_scale != 1.0 {
            grid.with_tau_scale(self.grid.tau_scale)
        } else {
            grid
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            max_iters: self.solver.max_iters,
            gap_tol: self.solver.gap_tol,
            ..SolverOptions::default()
        }
    }

    pub fn chain_options(&self, seed: u64) -> crate::ensembles::ChainOptions {
        crate::ensembles::ChainOptions {
            burn_in: self.burn_in,
            ..crate::ensembles::ChainOptions::new(self.sweeps, seed)
        }
    }
}

/// Seed for chain `index` at size `n`, mixed from the configured seed.
pub fn derived_seed(seed: u64, n: usize) -> u64 {
    // splitmix64 step
    let mut z = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

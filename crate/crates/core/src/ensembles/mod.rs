//! β-ensembles on `Y`: joint density, Metropolis sampling, outlier
//! probabilities, Fekete configurations and rate fits.

mod chain;
mod conditional;
mod estimate;
mod fekete;
mod ldp;
mod state;

use serde::{Deserialize, Serialize};

pub use chain::{
    run_chain, run_chains, write_chain_csv, write_chain_stats, ChainOptions, ChainOutput, MIN_BURN_IN,
    TARGET_ACCEPTANCE,
};
pub use conditional::{sum_log_dist, ConditionalRule};
pub use estimate::{
    estimate_any_coordinate_prob, estimate_conditional_prob, estimate_exchangeable_prob,
    estimate_outlier_prob, estimate_z1_expectation, sandwich_holds, EstimateMethod, OutlierRecord,
    BATCHES_PER_CHAIN,
};
pub use fekete::{fekete_ascent, fekete_potential_gap, FeketeResult};
pub use ldp::{fit_rate, ldp_rate_fit, predicted_rate, FitModel, LdpReport, MIN_FIT_POINTS, WINDOW_SAMPLES};
pub use state::{
    detailed_balance_terms, log_acceptance, log_joint_density, log_tau_density, mcmc_sweep, ChainStats,
    EnsembleState, Proposal,
};

use num_complex::Complex64;

use crate::domain::{DomainGrid, Window};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::measure::wasserstein1_real;
use crate::potential::EquilibriumSolution;

/// An `n`-point ensemble on the grid's domain with an outlier window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub field: FieldSpec,
    pub grid: DomainGrid,
    pub window: Window,
}

impl EnsembleConfig {
    pub fn new(n: usize, field: FieldSpec, grid: DomainGrid, window: Window) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("ensemble needs n >= 1".into()));
        }
        field.validate()?;
        grid.validate()?;
        if let Some(wb) = window.bounding_box() {
            let yb = grid.domain.bounding_box();
            let eps = 1e-9 * (1.0 + grid.domain.diameter());
            let inside = wb[0] >= yb[0] - eps && wb[1] <= yb[1] + eps && wb[2] >= yb[2] - eps && wb[3] <= yb[3] + eps;
            if !inside {
                return Err(Error::InvalidInput("window lies outside the bounding box of Y".into()));
            }
        }
        Ok(EnsembleConfig { n, field, grid, window })
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.field.clone(), self.grid.clone(), self.window.clone())
    }
}

/// Pooled post-burn-in snapshots as one weighted point set on the line.
pub fn average_empirical_measure(chains: &[ChainOutput]) -> Vec<(f64, f64)> {
    chains
        .iter()
        .flat_map(|c| c.snapshots.iter())
        .flat_map(|(_, pts)| pts.iter().map(|z| (z.re, 1.0)))
        .collect()
}

/// Wasserstein-1 distance (real line) between the pooled snapshots and `mu`.
pub fn empirical_distance_to_equilibrium(chains: &[ChainOutput], sol: &EquilibriumSolution) -> f64 {
    let emp = average_empirical_measure(chains);
    wasserstein1_real(&emp, &equilibrium_points(sol))
}

/// Fraction of snapshots whose empirical measure is farther than `radius`
/// from `mu` in Wasserstein-1 (real line).
pub fn concentration_fraction(chains: &[ChainOutput], sol: &EquilibriumSolution, radius: f64) -> f64 {
    let eq = equilibrium_points(sol);
    let mut total = 0usize;
    let mut far = 0usize;
    for c in chains {
        for (_, pts) in &c.snapshots {
            let emp: Vec<(f64, f64)> = pts.iter().map(|z: &Complex64| (z.re, 1.0)).collect();
            total += 1;
            if wasserstein1_real(&emp, &eq) > radius {
                far += 1;
            }
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        far as f64 / total as f64
    }
}

/// Real parts and weights of the support of `mu`.
pub fn equilibrium_points(sol: &EquilibriumSolution) -> Vec<(f64, f64)> {
    sol.grid
        .nodes
        .iter()
        .zip(sol.measure.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(z, w)| (z.re, *w))
        .collect()
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::energy::log_potential_at;
use super::solver::{solve_equilibrium, SolverOptions};
use super::EquilibriumSolution;
use crate::error::Result;
use crate::field::{FieldSpec, Potential};
use crate::potential::weighted_energy;

/// Outcome of comparing `S_R` with the contact set `S_R*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportVerdict {
    Holds,
    Marginal,
    Fails,
}

/// Symmetric-difference fractions at or below this count as equality.
pub const SUPPORT_HOLDS_FRACTION: f64 = 0.1;
/// Fractions at or above this count as a clear mismatch.
pub const SUPPORT_FAILS_FRACTION: f64 = 0.25;
/// Lower bound on the contact-set tolerance.
pub const TOL_EQ_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportReport {
    pub support_sr: Vec<usize>,
    pub support_srstar: Vec<usize>,
    /// Nodes in exactly one of the two sets.
    pub symmetric_difference: usize,
    /// `symmetric_difference / |S_R ∪ S_R*|`.
    pub fraction: f64,
    pub verdict: SupportVerdict,
}

/// `S_R` (weights above `tol_weight * max weight`) and `S_R*` (`|R - V| < tol_eq`).
pub(crate) fn support_sets(
    sol: &EquilibriumSolution,
    tol_weight: f64,
    tol_eq: f64,
) -> (Vec<usize>, Vec<usize>) {
    let sr = sol.support_by_weight(tol_weight);
    let srstar = (0..sol.grid.nodes.len())
        .filter(|&i| sol.grid.tau_mass[i] > 0.0)
        .filter(|&i| (sol.r_values[i] - sol.potential_values[i] - sol.rho).abs() < tol_eq)
        .collect();
    (sr, srstar)
}

pub(crate) fn classify(fraction: f64, converged: bool) -> SupportVerdict {
    let v = if fraction <= SUPPORT_HOLDS_FRACTION {
        SupportVerdict::Holds
    } else if fraction >= SUPPORT_FAILS_FRACTION {
        SupportVerdict::Fails
    } else {
        SupportVerdict::Marginal
    };
    if !converged && v == SupportVerdict::Holds {
        SupportVerdict::Marginal
    } else {
        v
    }
}

/// Extract both supports and decide whether they coincide.
pub fn extract_supports(sol: &EquilibriumSolution, tol_weight: f64, tol_eq: f64) -> SupportReport {
    let (sr, srstar) = support_sets(sol, tol_weight, tol_eq);
    let n = sol.grid.nodes.len();
    let mut in_sr = vec![false; n];
    let mut in_star = vec![false; n];
    for &i in &sr {
        in_sr[i] = true;
    }
    for &i in &srstar {
        in_star[i] = true;
    }
    let union = (0..n).filter(|&i| in_sr[i] || in_star[i]).count();
    let diff = (0..n).filter(|&i| in_sr[i] != in_star[i]).count();
    let fraction = if union == 0 { 1.0 } else { diff as f64 / union as f64 };
    SupportReport {
        verdict: classify(fraction, sol.converged),
        support_sr: sr,
        support_srstar: srstar,
        symmetric_difference: diff,
        fraction,
    }
}

/// `rho = E(mu) - int R dmu`.
pub fn robin_constant(sol: &EquilibriumSolution) -> Result<f64> {
    let e = weighted_energy(&sol.measure, &sol.grid, &sol.field)?;
    Ok(e - sol.measure.integrate(|i| sol.r_values[i]))
}

/// `V(z) = U^mu(z) + rho`.
pub fn green_function(sol: &EquilibriumSolution, z: Complex64) -> f64 {
    green_function_flagged(sol, z).0
}

/// As [`green_function`], also reporting whether `z` hit a weighted node.
pub fn green_function_flagged(sol: &EquilibriumSolution, z: Complex64) -> (f64, bool) {
    let (u, hit) = log_potential_at(&sol.measure, &sol.grid, z);
    (u + sol.rho, hit)
}

/// `beta (R(z) - V(z)) = 2Q(z) - beta V(z)`, with small negative values
/// (within `3 * kkt * beta`) reported as zero.
pub fn rate_function(sol: &EquilibriumSolution, z: Complex64) -> f64 {
    let beta = sol.field.beta;
    let j = beta * (sol.field.r(z) - green_function(sol, z));
    let band = 3.0 * sol.kkt_residual * beta;
    if j >= 0.0 {
        j
    } else if j > -band {
        0.0
    } else {
        log::warn!("rate function {j:.3e} at {z} below -{band:.1e}; solver may be unconverged");
        j
    }
}

/// Replace `R` by the tabulated Green function of `sol` and re-solve from
/// `mu`. The contact set of the new problem is the whole grid, so the
/// support comparison must fail.
pub fn contact_counterexample(sol: &EquilibriumSolution) -> Result<EquilibriumSolution> {
    let beta = sol.field.beta;
    let points: Vec<[f64; 2]> = sol.grid.nodes.iter().map(|z| [z.re, z.im]).collect();
    let values: Vec<f64> = sol
        .potential_values
        .iter()
        .map(|u| 0.5 * beta * (u + sol.rho))
        .collect();
    let field = FieldSpec::new(beta, Potential::Tabulated { points, values })?;
    let opts = SolverOptions {
        initial: Some(sol.measure.clone()),
        tol_weight: sol.tol_weight,
        ..Default::default()
    };
    solve_equilibrium(&sol.grid, &field, &opts)
}

//! Weighted equilibrium problem on a grid: energy, solver, Robin constant,
//! Green and rate functions, supports, and the closed-form radial case.

mod energy;
mod radial;
mod solver;
mod support;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use energy::{
    field_on_nodes, log_potential_at, log_potential_on_nodes, weighted_energy, weighted_energy_with,
    Desingularization, LogKernel,
};
pub use radial::{
    radial_green_function, radial_rate_function, radial_robin_constant, radial_support_radius,
    validate_superlogarithmic, validate_superlogarithmic_with, SuperlogReport, SUPERLOG_MARGIN,
};
pub use solver::{solve_equilibrium, SolverOptions};
pub use support::{
    contact_counterexample, extract_supports, green_function, green_function_flagged, rate_function,
    robin_constant, SupportReport, SupportVerdict, SUPPORT_FAILS_FRACTION, SUPPORT_HOLDS_FRACTION,
    TOL_EQ_FLOOR,
};

use crate::domain::{Domain, DomainGrid};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::measure::DiscreteMeasure;

/// Converged (or best) discrete equilibrium measure with its diagnostics.
#[derive(Clone, Debug)]
pub struct EquilibriumSolution {
    pub grid: DomainGrid,
    pub field: FieldSpec,
    pub measure: DiscreteMeasure,
    pub rho: f64,
    /// `U^mu(z_i) = sum_j w_j log|z_i - z_j|`.
    pub potential_values: Vec<f64>,
    /// `R(z_i)`.
    pub r_values: Vec<f64>,
    pub support_sr: Vec<usize>,
    pub support_srstar: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub energy: f64,
    pub energy_trace: Vec<f64>,
    pub duality_gap: f64,
    pub tol_weight: f64,
}

impl EquilibriumSolution {
    /// Nodes with weight above `tol_weight` times the largest weight.
    pub fn support_by_weight(&self, tol_weight: f64) -> Vec<usize> {
        let cut = tol_weight * self.measure.max_weight();
        self.measure
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > cut)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest violation of `R - U = rho` on `support` and of `R - U >= rho` anywhere.
    pub fn kkt_residual_for(&self, support: &[usize]) -> f64 {
        let slack = |i: usize| self.r_values[i] - self.potential_values[i] - self.rho;
        let eq = support.iter().map(|&i| slack(i).abs()).fold(0.0, f64::max);
        let ineq = (0..self.grid.nodes.len())
            .filter(|&i| self.grid.tau_mass[i] > 0.0)
            .map(|i| (-slack(i)).max(0.0))
            .fold(0.0, f64::max);
        eq.max(ineq)
    }

    /// `max(3 * kkt_residual, TOL_EQ_FLOOR)`.
    pub fn default_tol_eq(&self) -> f64 {
        (3.0 * self.kkt_residual).max(TOL_EQ_FLOOR)
    }

    /// `V` at every node.
    pub fn green_on_nodes(&self) -> Vec<f64> {
        self.potential_values.iter().map(|u| u + self.rho).collect()
    }

    /// Largest `|z|` over `S_R`.
    pub fn support_radius(&self) -> f64 {
        self.support_sr
            .iter()
            .map(|&i| self.grid.nodes[i].norm())
            .fold(0.0, f64::max)
    }

    /// Smallest and largest real part over `S_R`.
    pub fn support_extent(&self) -> (f64, f64) {
        self.support_sr.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let x = self.grid.nodes[i].re;
            (lo.min(x), hi.max(x))
        })
    }

    pub fn to_file(&self) -> SolutionFile {
        SolutionFile {
            nodes: self.grid.nodes.iter().map(|z| [z.re, z.im]).collect(),
            weights: self.measure.weights().to_vec(),
            rho: self.rho,
            kkt_residual: self.kkt_residual,
            support_sr: self.support_sr.clone(),
            support_srstar: self.support_srstar.clone(),
            energy: self.energy,
            iterations: self.iterations,
            converged: self.converged,
            tol_weight: self.tol_weight,
            grid: self.grid.clone(),
            field: self.field.clone(),
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &self.to_file())?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let file: SolutionFile = serde_json::from_reader(std::io::BufReader::new(f))?;
        Self::from_file(file)
    }

    /// Rebuild a solution, recomputing potentials and the residual from the stored weights.
    pub fn from_file(file: SolutionFile) -> Result<Self> {
        let n = file.grid.nodes.len();
        if file.nodes.len() != n || file.weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: file.weights.len(),
            });
        }
        let measure = DiscreteMeasure::new(file.weights)?;
        let potential_values = log_potential_on_nodes(&measure, &file.grid)?;
        let r_values = field_on_nodes(&file.grid, &file.field)?;
        let mut sol = EquilibriumSolution {
            grid: file.grid,
            field: file.field,
            measure,
            rho: file.rho,
            potential_values,
            r_values,
            support_sr: file.support_sr,
            support_srstar: file.support_srstar,
            kkt_residual: 0.0,
            iterations: file.iterations,
            converged: file.converged,
            energy: file.energy,
            energy_trace: vec![],
            duality_gap: f64::NAN,
            tol_weight: file.tol_weight,
        };
        sol.kkt_residual = sol.kkt_residual_for(&sol.support_sr.clone());
        Ok(sol)
    }
}

/// On-disk form of an [`EquilibriumSolution`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub rho: f64,
    pub kkt_residual: f64,
    #[serde(rename = "support_SR")]
    pub support_sr: Vec<usize>,
    #[serde(rename = "support_SRstar")]
    pub support_srstar: Vec<usize>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol_weight: f64,
    pub grid: DomainGrid,
    pub field: FieldSpec,
}

/// Robin constants on successively halved cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementStep {
    pub resolution: usize,
    pub cell_size: f64,
    pub rho: f64,
}

pub fn refinement_study(
    domain: &Domain,
    field: &FieldSpec,
    base_resolution: usize,
    levels: usize,
    opts: &SolverOptions,
) -> Result<Vec<RefinementStep>> {
    (0..levels)
        .map(|k| {
            let res = base_resolution << k;
            let grid = DomainGrid::cells(domain, res)?;
            let sol = solve_equilibrium(&grid, field, opts)?;
            Ok(RefinementStep {
                resolution: res,
                cell_size: grid.cell_size,
                rho: sol.rho,
            })
        })
        .collect()
}

use num_complex::Complex64;

use crate::domain::DomainGrid;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::measure::DiscreteMeasure;

/// Treatment of the `i = j` term of the discrete log kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Desingularization {
    /// Replace `log|z_i - z_i|` by `log(delta_i / 2)`.
    #[default]
    CellScale,
    /// Drop the diagonal.
    Off,
}

/// Dense matrix `A_ij = -log|z_i - z_j|`, diagonal per [`Desingularization`].
#[derive(Clone, Debug)]
pub struct LogKernel {
    n: usize,
    data: Vec<f64>,
}

impl LogKernel {
    pub fn new(grid: &DomainGrid, desing: Desingularization) -> Self {
        let n = grid.nodes.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = match desing {
                Desingularization::CellScale => -(grid.diag_desing[i] / 2.0).ln(),
                Desingularization::Off => 0.0,
            };
            for j in 0..i {
                let v = -(grid.nodes[i] - grid.nodes[j]).norm().ln();
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        LogKernel { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `A w`, skipping zero weights.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                let col = self.row(j);
                for (o, a) in out.iter_mut().zip(col) {
                    *o += wj * a;
                }
            }
        }
        out
    }
}

/// `R` at every node; fails on the first non-finite value.
pub fn field_on_nodes(grid: &DomainGrid, field: &FieldSpec) -> Result<Vec<f64>> {
    grid.nodes
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let r = field.r(*z);
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::NonFiniteField { node: i })
            }
        })
        .collect()
}

fn check_dims(mu: &DiscreteMeasure, grid: &DomainGrid) -> Result<()> {
    if mu.len() != grid.nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.nodes.len(),
            got: mu.len(),
        });
    }
    Ok(())
}

/// Discrete weighted energy
/// `-sum_{i != j} w_i w_j log|z_i - z_j| - sum_i w_i^2 log(delta_i/2) + 2 sum_i w_i R(z_i)`.
pub fn weighted_energy(mu: &DiscreteMeasure, grid: &DomainGrid, field: &FieldSpec) -> Result<f64> {
    weighted_energy_with(mu, grid, field, Desingularization::CellScale)
}

pub fn weighted_energy_with(
    mu: &DiscreteMeasure,
    grid: &DomainGrid,
    field: &FieldSpec,
    desing: Desingularization,
) -> Result<f64> {
    check_dims(mu, grid)?;
    let w = mu.weights();
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut pair = 0.0;
    for (a, &i) in support.iter().enumerate() {
        for &j in &support[..a] {
            pair -= 2.0 * w[i] * w[j] * (grid.nodes[i] - grid.nodes[j]).norm().ln();
        }
        if desing == Desingularization::CellScale {
            pair -= w[i] * w[i] * (grid.diag_desing[i] / 2.0).ln();
        }
    }
    let mut lin = 0.0;
    for &i in &support {
        let r = field.r(grid.nodes[i]);
        if !r.is_finite() {
            return Err(Error::NonFiniteField { node: i });
        }
        lin += w[i] * r;
    }
    Ok(pair + 2.0 * lin)
}

/// `U^mu(z_i) = sum_j w_j log|z_i - z_j|` at every node, with the diagonal
/// replaced by `log(delta_i / 2)`.
pub fn log_potential_on_nodes(mu: &DiscreteMeasure, grid: &DomainGrid) -> Result<Vec<f64>> {
    check_dims(mu, grid)?;
    let w = mu.weights();
    let mut u = vec![0.0; w.len()];
    for (j, &wj) in w.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += wj
                * if i == j {
                    (grid.diag_desing[i] / 2.0).ln()
                } else {
                    (grid.nodes[i] - grid.nodes[j]).norm().ln()
                };
        }
    }
    Ok(u)
}

/// `U^mu(z)` at an arbitrary point. The flag reports a coincidence with a
/// weighted node, in which case that node's desingularised value is used.
pub fn log_potential_at(mu: &DiscreteMeasure, grid: &DomainGrid, z: Complex64) -> (f64, bool) {
    let scale = 1e-12 * (1.0 + z.norm());
    let mut coincident = false;
    let mut u = 0.0;
    for (i, &wi) in mu.weights().iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let d = (z - grid.nodes[i]).norm();
        if d <= scale {
            coincident = true;
            u += wi * (grid.diag_desing[i] / 2.0).ln();
        } else {
            u += wi * d.ln();
        }
    }
    (u, coincident)
}

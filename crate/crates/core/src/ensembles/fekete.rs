use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::log_joint_density;
use crate::domain::DomainGrid;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::measure::DiscreteMeasure;
use crate::potential::{log_potential_at, EquilibriumSolution};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeketeResult {
    pub nodes: Vec<usize>,
    pub points: Vec<Complex64>,
    /// `log A_{n,beta,Q}` at the configuration.
    pub log_density: f64,
    /// `(1/n^2) log A`.
    pub value: f64,
    pub passes: usize,
}

const MAX_PASSES: usize = 500;

/// Coordinate ascent of `log A` over grid nodes from `starts` random
/// configurations; the best local maximiser is kept.
pub fn fekete_ascent<R: Rng + ?Sized>(
    n: usize,
    grid: &DomainGrid,
    field: &FieldSpec,
    starts: usize,
    rng: &mut R,
) -> Result<FeketeResult> {
    if n < 2 {
        return Err(Error::InvalidInput("Fekete ascent needs n >= 2".into()));
    }
    let eligible: Vec<usize> = (0..grid.len()).filter(|&i| grid.tau_mass[i] > 0.0).collect();
    let m = eligible.len();
    if m < n {
        return Err(Error::InvalidInput(format!("{m} nodes cannot host {n} distinct points")));
    }
    let nodes: Vec<Complex64> = eligible.iter().map(|&i| grid.nodes[i]).collect();
    let penalty: Vec<f64> = nodes.iter().map(|z| 2.0 * n as f64 * field.q(*z)).collect();
    // log|x_a - x_b| with a zero placeholder on the diagonal
    let mut logs = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..a {
            let v = (nodes[a] - nodes[b]).norm().ln();
            logs[a * m + b] = v;
            logs[b * m + a] = v;
        }
    }
    let beta = field.beta;
    let mut best: Option<FeketeResult> = None;
    for _ in 0..starts.max(1) {
        let mut cfg: Vec<usize> = sample(rng, m, n).into_vec();
        let mut occupied = vec![false; m];
        for &c in &cfg {
            occupied[c] = true;
        }
        let mut sums = vec![0.0; m];
        for &c in &cfg {
            for (a, s) in sums.iter_mut().enumerate() {
                *s += logs[a * m + c];
            }
        }
        let mut passes = 0;
        loop {
            passes += 1;
            let mut moved = false;
            for k in 0..n {
                let cur = cfg[k];
                let score = |a: usize| beta * (sums[a] - logs[a * m + cur]) - penalty[a];
                let mut arg = cur;
                let mut val = score(cur);
                for a in 0..m {
                    if occupied[a] && a != cur {
                        continue;
                    }
                    let s = score(a);
                    if s > val + 1e-13 * (1.0 + val.abs()) {
                        val = s;
                        arg = a;
                    }
                }
                if arg != cur {
                    for (a, s) in sums.iter_mut().enumerate() {
                        *s += logs[a * m + arg] - logs[a * m + cur];
                    }
                    occupied[cur] = false;
                    occupied[arg] = true;
                    cfg[k] = arg;
                    moved = true;
                }
            }
            if !moved || passes >= MAX_PASSES {
                break;
            }
        }
        let points: Vec<Complex64> = cfg.iter().map(|&a| nodes[a]).collect();
        let log_density = log_joint_density(&points, field);
        if best.as_ref().is_none_or(|b| log_density > b.log_density) {
            best = Some(FeketeResult {
                nodes: cfg.iter().map(|&a| eligible[a]).collect(),
                points,
                log_density,
                value: log_density / (n * n) as f64,
                passes,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no Fekete start".into()))
}

/// `max_w [(1/(n-1)) sum_{j>=2} log|w - z_j| - U^mu(w)]` over `probes`.
pub fn fekete_potential_gap(fekete: &FeketeResult, sol: &EquilibriumSolution, probes: &[Complex64]) -> f64 {
    let rest = &fekete.points[1..];
    let k = rest.len() as f64;
    let mu: &DiscreteMeasure = &sol.measure;
    probes
        .iter()
        .map(|w| {
            let s: f64 = rest.iter().map(|z| (w - z).norm().ln()).sum::<f64>() / k;
            s - log_potential_at(mu, &sol.grid, *w).0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainGrid, Window};
use crate::ensembles::{run_chains, ChainOptions, ConditionalRule, EnsembleConfig, BATCHES_PER_CHAIN};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::stats::gelman_rubin;

/// Chains with `R-hat` above this are flagged as not equilibrated.
pub const RHAT_THRESHOLD: f64 = 1.1;

/// Estimate of `h_n = Z_n(Q) / Z_{n-1}(nQ/(n-1))` and of the telescoping step
/// `log Z_n(Q) - log Z_{n-1}(Q) = log h_n - log E'[exp(2 sum_j Q(z_j))]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub n: usize,
    pub log_h: f64,
    pub log_h_se: f64,
    /// `log E'[exp(2 sum_j Q(z_j))]` under the `(n-1)`-point chain.
    pub log_shift: f64,
    pub increment: f64,
    pub increment_se: f64,
    pub rhat: f64,
    pub equilibrated: bool,
    pub samples: usize,
}

/// `log` of the sample mean of `exp(v)`.
fn log_mean_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (v.iter().map(|x| (x - m).exp()).sum::<f64>() / v.len() as f64).ln()
}

/// Point estimate from the pooled samples; error from the spread of the
/// statistic recomputed on batches.
fn batched<F: Fn(&[usize]) -> f64>(per_chain: &[usize], stat: F) -> (f64, f64) {
    let all: Vec<usize> = (0..per_chain.iter().sum()).collect();
    let point = stat(&all);
    let mut vals = Vec::new();
    let mut offset = 0;
    for &len in per_chain {
        let size = len / BATCHES_PER_CHAIN;
        if size > 0 {
            for b in 0..BATCHES_PER_CHAIN {
                let idx: Vec<usize> = (offset + b * size..offset + (b + 1) * size).collect();
                vals.push(stat(&idx));
            }
        }
        offset += len;
    }
    if vals.len() < 2 {
        return (point, f64::NAN);
    }
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (point, (var / k).sqrt())
}

/// `h_n` by chains on the `(n-1)`-point ensemble with potential `nQ/(n-1)`;
/// the one-point integral is evaluated every `every` sweeps.
pub fn ratio_estimate_h_n(
    grid: &DomainGrid,
    field: &FieldSpec,
    n: usize,
    opts: &ChainOptions,
    seeds: &[u64],
    every: usize,
) -> Result<RatioEstimate> {
    if n < 2 {
        return Err(Error::InvalidInput("h_n needs n >= 2".into()));
    }
    let every = every.max(1);
    let m = n - 1;
    let chain_cfg = EnsembleConfig::new(m, field.scaled(n as f64 / m as f64), grid.clone(), Window::All)?;
    let full = EnsembleConfig::new(n, field.clone(), grid.clone(), Window::All)?;
    let rule = ConditionalRule::new(&full)?;
    let copts = ChainOptions {
        snapshot_every: every,
        ..opts.clone()
    };
    let chains = run_chains(&chain_cfg, &copts, seeds)?;
    let mut inner: Vec<Vec<f64>> = Vec::new();
    let mut shift: Vec<Vec<f64>> = Vec::new();
    for c in &chains {
        let pts: Vec<&Vec<Complex64>> = c.snapshots.iter().map(|(_, p)| p).collect();
        // no coordinate is excluded: index m is out of range
        inner.push(pts.iter().map(|p| rule.log_integrals(p, m, &full).1).collect());
        shift.push(
            pts.iter()
                .map(|p| 2.0 * p.iter().map(|z| field.q(*z)).sum::<f64>())
                .collect(),
        );
    }
    let lens: Vec<usize> = inner.iter().map(|s| s.len()).collect();
    let flat_inner: Vec<f64> = inner.iter().flatten().copied().collect();
    let flat_shift: Vec<f64> = shift.iter().flatten().copied().collect();
    let pick = |v: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let (log_h, log_h_se) = batched(&lens, |idx| log_mean_exp(&pick(&flat_inner, idx)));
    let (increment, increment_se) = batched(&lens, |idx| {
        log_mean_exp(&pick(&flat_inner, idx)) - log_mean_exp(&pick(&flat_shift, idx))
    });
    let log_shift = log_mean_exp(&flat_shift);
    let rhat = gelman_rubin(&inner);
    let equilibrated = !(rhat > RHAT_THRESHOLD);
    if !equilibrated {
        log::warn!("h_{n}: R-hat {rhat:.3} exceeds {RHAT_THRESHOLD}");
    }
    Ok(RatioEstimate {
        n,
        log_h,
        log_h_se,
        log_shift,
        increment,
        increment_se,
        rhat,
        equilibrated,
        samples: flat_inner.len(),
    })
}

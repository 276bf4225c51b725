use serde::{Deserialize, Serialize};

use super::chain::ChainOutput;
use super::EnsembleConfig;
use crate::stats::{pooled_batch_means, Z95};

/// Batches per chain for batch-means standard errors.
pub const BATCHES_PER_CHAIN: usize = 20;

/// How an outlier probability was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// Fraction of sweeps with the event.
    Mcmc,
    /// Chain average of the conditional probability given the other coordinates.
    McmcConditional,
    /// Deterministic quadrature.
    Quadrature,
}

/// One row of an [`super::LdpReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub n: usize,
    pub psi_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub method: EstimateMethod,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl OutlierRecord {
    /// Record with a symmetric 95% interval clipped to `[0, 1]`.
    pub fn from_mean(n: usize, mean: f64, se: f64, method: EstimateMethod, samples: usize) -> Self {
        let se = if se.is_finite() { se } else { 0.0 };
        OutlierRecord {
            n,
            psi_hat: mean,
            ci_low: (mean - Z95 * se).max(0.0),
            ci_high: (mean + Z95 * se).min(1.0),
            std_error: se,
            method,
            samples,
            warning: None,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

fn indicator_record(n: usize, series: Vec<Vec<f64>>) -> OutlierRecord {
    let samples: usize = series.iter().map(|s| s.len()).sum();
    let hits: f64 = series.iter().flatten().sum();
    if samples > 0 && hits == 0.0 {
        // rule of three for a one-sided 95% bound
        return OutlierRecord {
            n,
            psi_hat: 0.0,
            ci_low: 0.0,
            ci_high: (3.0 / samples as f64).min(1.0),
            std_error: 0.0,
            method: EstimateMethod::Mcmc,
            samples,
            warning: Some("rare event — use larger chains or smaller n".into()),
        };
    }
    let (mean, se) = pooled_batch_means(&series, BATCHES_PER_CHAIN);
    OutlierRecord::from_mean(n, mean, se, EstimateMethod::Mcmc, samples)
}

/// `psi_n(W) = Prob{z_1 in W}` from the hit frequency of the first coordinate.
pub fn estimate_outlier_prob(config: &EnsembleConfig, chains: &[ChainOutput]) -> OutlierRecord {
    let series = chains
        .iter()
        .map(|c| {
            c.z1
                .iter()
                .map(|z| if config.window.contains(*z) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    indicator_record(config.n, series)
}

/// `psi_n(W)` from the fraction of all coordinates in `W` (exchangeability).
pub fn estimate_exchangeable_prob(config: &EnsembleConfig, chains: &[ChainOutput]) -> OutlierRecord {
    let n = config.n as f64;
    let series = chains
        .iter()
        .map(|c| c.count_in_w.iter().map(|k| *k as f64 / n).collect())
        .collect();
    indicator_record(config.n, series)
}

/// `Prob{some z_j in W}`.
pub fn estimate_any_coordinate_prob(config: &EnsembleConfig, chains: &[ChainOutput]) -> OutlierRecord {
    let series = chains
        .iter()
        .map(|c| {
            c.count_in_w
                .iter()
                .map(|k| if *k > 0 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    indicator_record(config.n, series)
}

/// `psi_n(W)` as the chain average of `P(z_k in W | z_j, j != k)`.
pub fn estimate_conditional_prob(config: &EnsembleConfig, chains: &[ChainOutput]) -> OutlierRecord {
    let series: Vec<Vec<f64>> = chains.iter().map(|c| c.conditional.clone()).collect();
    let samples: usize = series.iter().map(|s| s.len()).sum();
    let (mean, se) = pooled_batch_means(&series, BATCHES_PER_CHAIN);
    let mut rec = OutlierRecord::from_mean(config.n, mean, se, EstimateMethod::McmcConditional, samples);
    if samples == 0 {
        rec.warning = Some("no conditional evaluations recorded".into());
    }
    rec
}

/// Mean and batch-means standard error of `f(z_1)` over all chains.
pub fn estimate_z1_expectation(chains: &[ChainOutput], f: impl Fn(num_complex::Complex64) -> f64) -> (f64, f64) {
    let series: Vec<Vec<f64>> = chains.iter().map(|c| c.z1.iter().map(|z| f(*z)).collect()).collect();
    pooled_batch_means(&series, BATCHES_PER_CHAIN)
}

/// Check `psi <= psi' <= n psi` allowing the two intervals' half-widths as slack.
pub fn sandwich_holds(psi: &OutlierRecord, any: &OutlierRecord) -> bool {
    let n = psi.n as f64;
    let slack = psi.half_width() + any.half_width();
    psi.psi_hat <= any.psi_hat + slack && any.psi_hat <= n * psi.psi_hat + n * psi.half_width() + any.half_width()
}

use serde::{Deserialize, Serialize};

use super::estimate::OutlierRecord;
use crate::domain::Window;
use crate::error::{Error, Result};
use crate::potential::{rate_function, EquilibriumSolution};
use crate::stats::weighted_least_squares;

/// Regression model for `-log psi_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `a + rate * n`.
    Plain,
    /// `a + c log n + rate * n`, absorbing a power-law prefactor.
    LogPrefactor,
}

/// Minimum number of usable `n` values for a fit.
pub const MIN_FIT_POINTS: usize = 4;
/// Sample count used for the infimum of the rate function over `W`.
pub const WINDOW_SAMPLES: usize = 400;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LdpReport {
    pub records: Vec<OutlierRecord>,
    pub model: FitModel,
    /// Rate under `model`.
    pub fitted_rate: f64,
    pub fitted_rate_se: f64,
    /// Rate under the plain two-parameter model.
    pub fitted_rate_plain: f64,
    pub fitted_rate_plain_se: f64,
    pub intercept: f64,
    /// Coefficient of `log n` (zero for the plain model).
    pub log_coefficient: f64,
    /// `inf over W of J`.
    pub predicted_rate: f64,
    pub relative_gap: f64,
    /// `n` values left out because their estimate was zero.
    pub dropped: Vec<usize>,
}

/// Rate fit from records alone; `predicted_rate` is supplied by the caller.
pub fn fit_rate(records: &[OutlierRecord], model: FitModel, predicted_rate: f64) -> Result<LdpReport> {
    let usable: Vec<&OutlierRecord> = records.iter().filter(|r| r.psi_hat > 0.0).collect();
    let dropped: Vec<usize> = records.iter().filter(|r| r.psi_hat <= 0.0).map(|r| r.n).collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            have: usable.len(),
        });
    }
    let y: Vec<f64> = usable.iter().map(|r| -r.psi_hat.ln()).collect();
    // delta method: sd(-log psi) = se(psi) / psi
    let sd: Vec<f64> = usable.iter().map(|r| r.std_error / r.psi_hat).collect();
    let w: Vec<f64> = if sd.iter().all(|s| *s > 0.0 && s.is_finite()) {
        sd.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; usable.len()]
    };
    let plain_design: Vec<Vec<f64>> = usable.iter().map(|r| vec![1.0, r.n as f64]).collect();
    let plain = weighted_least_squares(&plain_design, &y, &w)?;
    let (fitted, se, intercept, logc) = match model {
        FitModel::Plain => (plain.coeffs[1], plain.std_errors[1], plain.coeffs[0], 0.0),
        FitModel::LogPrefactor => {
            let design: Vec<Vec<f64>> = usable
                .iter()
                .map(|r| vec![1.0, (r.n as f64).ln(), r.n as f64])
                .collect();
            let fit = weighted_least_squares(&design, &y, &w)?;
            (fit.coeffs[2], fit.std_errors[2], fit.coeffs[0], fit.coeffs[1])
        }
    };
    let relative_gap = if predicted_rate.abs() > 0.0 {
        (fitted - predicted_rate).abs() / predicted_rate.abs()
    } else {
        fitted.abs()
    };
    Ok(LdpReport {
        records: records.to_vec(),
        model,
        fitted_rate: fitted,
        fitted_rate_se: se,
        fitted_rate_plain: plain.coeffs[1],
        fitted_rate_plain_se: plain.std_errors[1],
        intercept,
        log_coefficient: logc,
        predicted_rate,
        relative_gap,
        dropped,
    })
}

/// `min` of the rate function over a sample of `W ∩ Y`.
pub fn predicted_rate(sol: &EquilibriumSolution, window: &Window) -> f64 {
    window
        .sample_points(&sol.grid.domain, WINDOW_SAMPLES)
        .into_iter()
        .map(|z| rate_function(sol, z))
        .fold(f64::INFINITY, f64::min)
}

/// Fit `-log psi_n` against `n` and compare with `inf_W J`.
pub fn ldp_rate_fit(
    records: &[OutlierRecord],
    sol: &EquilibriumSolution,
    window: &Window,
    model: FitModel,
) -> Result<LdpReport> {
    fit_rate(records, model, predicted_rate(sol, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EstimateMethod;

    fn synthetic(rate: f64) -> Vec<OutlierRecord> {
        [8, 16, 24, 32, 48, 64]
            .iter()
            .map(|&n| OutlierRecord::from_mean(n, (-rate * n as f64).exp(), 0.0, EstimateMethod::Quadrature, 0))
            .collect()
    }

    #[test]
    fn exact_exponential_recovered() {
        for model in [FitModel::Plain, FitModel::LogPrefactor] {
            let r = fit_rate(&synthetic(0.3), model, 0.3).unwrap();
            assert!((r.fitted_rate - 0.3).abs() < 1e-6, "{model:?}");
            assert!(r.relative_gap < 1e-5);
        }
    }

    #[test]
    fn too_few_points() {
        let mut recs = synthetic(0.3);
        recs.truncate(3);
        assert!(matches!(fit_rate(&recs, FitModel::Plain, 0.3), Err(Error::TooFewPoints { .. })));
        let mut recs = synthetic(0.3);
        for r in recs.iter_mut().skip(2) {
            r.psi_hat = 0.0;
        }
        let err = fit_rate(&recs, FitModel::Plain, 0.3).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { needed: 4, have: 2 }));
    }
}

//! Batch means, weighted least squares and small regression helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Mean and standard error from non-overlapping batch means.
/// Leftover samples at the end are dropped from the error estimate only.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let batches = batches.max(2);
    let size = n / batches;
    if size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Batch means over several independent chains: each chain contributes its
/// own batch means, and the standard error is that of the pooled batch means.
pub fn pooled_batch_means(chains: &[Vec<f64>], batches_per_chain: usize) -> (f64, f64) {
    let mut means = Vec::new();
    let mut total = 0.0;
    let mut count = 0usize;
    for s in chains {
        total += s.iter().sum::<f64>();
        count += s.len();
        let size = s.len() / batches_per_chain.max(1);
        if size == 0 {
            continue;
        }
        for b in 0..batches_per_chain {
            means.push(s[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64);
        }
    }
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = total / count as f64;
    let k = means.len();
    if k < 2 {
        return (mean, f64::NAN);
    }
    let bm = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Split `R-hat`: each chain is halved and the between/within variance ratio
/// of the halves is returned. `NaN` with fewer than four samples per half.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[h..2 * h]]
        })
        .collect();
    let len = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if len < 4 || halves.len() < 2 {
        return f64::NAN;
    }
    let k = halves.len() as f64;
    let l = len as f64;
    let means: Vec<f64> = halves.iter().map(|h| h[..len].iter().sum::<f64>() / l).collect();
    let grand = means.iter().sum::<f64>() / k;
    let between = l * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1.0);
    let within = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h[..len].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (l - 1.0))
        .sum::<f64>()
        / k;
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let pooled = (l - 1.0) / l * within + between / l;
    (pooled / within).sqrt()
}

/// Result of a weighted linear least-squares fit.
#[derive(Clone, Debug)]
pub struct WlsFit {
    pub coeffs: Vec<f64>,
    /// Standard errors, scaled by the residual variance factor when it exceeds one.
    pub std_errors: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
}

/// Minimise `sum_i w_i (y_i - sum_k X_ik c_k)^2`.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<WlsFit> {
    let m = y.len();
    let p = design.first().map_or(0, |r| r.len());
    if design.len() != m || w.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: design.len().min(w.len()),
        });
    }
    if m < p || p == 0 {
        return Err(Error::TooFewPoints { needed: p.max(1), have: m });
    }
    let x = DMatrix::from_fn(m, p, |i, k| design[i][k] * w[i].sqrt());
    let yy = DVector::from_fn(m, |i, _| y[i] * w[i].sqrt());
    let xtx = x.transpose() * &x;
    let inv = xtx
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("singular least-squares design".into()))?;
    let c = &inv * x.transpose() * &yy;
    let resid = &yy - &x * &c;
    let chi2 = resid.norm_squared();
    let dof = m - p;
    let inflate = if dof > 0 { (chi2 / dof as f64).max(1.0) } else { 1.0 };
    let std_errors = (0..p).map(|k| (inv[(k, k)] * inflate).sqrt()).collect();
    Ok(WlsFit {
        coeffs: c.iter().copied().collect(),
        std_errors,
        chi2,
        dof,
    })
}

/// Ordinary least-squares line: `(intercept, slope, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (my - slope * mx, slope, r2)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::DomainGrid;
use crate::error::{Error, Result};
use crate::potential::EquilibriumSolution;
use crate::quadrature::LogSumExp;
use crate::stats::{linear_fit, median};

/// Random polynomial of degree `n`, coefficients in increasing degree.
/// Real grids get real standard normal coefficients, planar grids complex
/// ones with independent standard normal parts.
pub fn random_polynomial<R: Rng + ?Sized>(n: usize, real: bool, monic: bool, rng: &mut R) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..=n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
            Complex64::new(re, im)
        })
        .collect();
    if monic {
        c[n] = Complex64::new(1.0, 0.0);
    }
    c
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// `log|p(z_i)| - n R(z_i)` on all nodes.
pub fn log_weighted_values(sol: &EquilibriumSolution, n: usize, coeffs: &[Complex64]) -> Vec<f64> {
    sol.grid
        .nodes
        .iter()
        .zip(&sol.r_values)
        .map(|(z, r)| horner(coeffs, *z).norm().ln() - n as f64 * r)
        .collect()
}

fn max_over(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max)
}

fn all_nodes(grid: &DomainGrid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.tau_mass[i] > 0.0).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupRestrictionReport {
    pub n: usize,
    pub trials: usize,
    /// `max over trials of ||e^{-nR} p||_Y / ||e^{-nR} p||_{S_R + 2 cells}`.
    pub max_ratio: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Ratio of the weighted sup over `Y` to that over `S_R` dilated by two cells.
pub fn sup_ratio(sol: &EquilibriumSolution, n: usize, coeffs: &[Complex64]) -> Result<f64> {
    if sol.support_sr.is_empty() {
        return Err(Error::EmptySupport);
    }
    let near = sol.grid.dilate(&sol.support_sr, 2.0 * sol.grid.cell_size);
    let v = log_weighted_values(sol, n, coeffs);
    Ok((max_over(&v, &all_nodes(&sol.grid)) - max_over(&v, &near)).exp())
}

/// Weighted sup norms of random degree-`n` polynomials are attained on `S_R`.
pub fn sup_restriction_check<R: Rng + ?Sized>(
    sol: &EquilibriumSolution,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<SupRestrictionReport> {
    if sol.support_sr.is_empty() {
        return Err(Error::EmptySupport);
    }
    let real = sol.grid.domain.is_real();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let p = random_polynomial(n, real, false, rng);
        max_ratio = max_ratio.max(sup_ratio(sol, n, &p)?);
    }
    let tolerance = 1.0 + 5.0 * sol.grid.cell_size;
    Ok(SupRestrictionReport {
        n,
        trials,
        max_ratio,
        tolerance,
        pass: max_ratio <= tolerance,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonicReport {
    pub n: usize,
    pub trials: usize,
    /// Smallest `log ||e^{-nR} p||_{S_R} + n rho` observed.
    pub min_margin: f64,
    /// Allowed shortfall of the margin below zero.
    pub slack: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Default log-scale slack: `n (kkt_residual + cell_size)`. The sup over
/// support nodes misses the boundary by up to a cell, and `rho` carries the
/// solver's residual.
pub fn monic_slack(sol: &EquilibriumSolution, n: usize) -> f64 {
    n as f64 * (sol.kkt_residual + sol.grid.cell_size)
}

/// `log ||e^{-nR} p||_{S_R} + n rho`; nonnegative in the continuum.
pub fn monic_margin(sol: &EquilibriumSolution, n: usize, coeffs: &[Complex64]) -> Result<f64> {
    if sol.support_sr.is_empty() {
        return Err(Error::EmptySupport);
    }
    let v = log_weighted_values(sol, n, coeffs);
    Ok(max_over(&v, &sol.support_sr) + n as f64 * sol.rho)
}

/// Random monic polynomials satisfy `||e^{-nR} p||_{S_R} >= e^{-n rho}`.
pub fn monic_lower_bound_check<R: Rng + ?Sized>(
    sol: &EquilibriumSolution,
    n: usize,
    trials: usize,
    slack: Option<f64>,
    rng: &mut R,
) -> Result<MonicReport> {
    let slack = slack.unwrap_or_else(|| monic_slack(sol, n));
    let real = sol.grid.domain.is_real();
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let p = random_polynomial(n, real, true, rng);
        let m = monic_margin(sol, n, &p)?;
        if m < -slack {
            violations += 1;
        }
        min_margin = min_margin.min(m);
    }
    Ok(MonicReport {
        n,
        trials,
        min_margin,
        slack,
        violations,
        pass: violations == 0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailReport {
    pub ns: Vec<usize>,
    /// Median over trials of `ratio_out` for each `n`.
    pub ratio_out: Vec<f64>,
    /// Slope of `log ratio_out` against `n`.
    pub fit_slope: f64,
    pub r2: f64,
    pub pass: bool,
}

/// `int_{Y \ N} |e^{-nR} p|^beta dtau / int_N |e^{-nR} p|^beta dtau`.
pub fn tail_ratio(sol: &EquilibriumSolution, n: usize, beta: f64, neighbourhood: &[usize], coeffs: &[Complex64]) -> f64 {
    let v = log_weighted_values(sol, n, coeffs);
    let mut inside = vec![false; v.len()];
    for &i in neighbourhood {
        inside[i] = true;
    }
    let mut num = LogSumExp::default();
    let mut den = LogSumExp::default();
    for (i, lv) in v.iter().enumerate() {
        let m = sol.grid.tau_mass[i];
        if m <= 0.0 {
            continue;
        }
        let t = m.ln() + beta * lv;
        if inside[i] {
            den.add(t);
        } else {
            num.add(t);
        }
    }
    (num.value() - den.value()).exp()
}

/// `S_R*` dilated by `cells` grid cells; refuses neighbourhoods covering `Y`.
pub fn tail_neighbourhood(sol: &EquilibriumSolution, cells: usize) -> Result<Vec<usize>> {
    if sol.support_srstar.is_empty() {
        return Err(Error::EmptySupport);
    }
    let nb = sol.grid.dilate(&sol.support_srstar, cells as f64 * sol.grid.cell_size);
    if nb.len() >= all_nodes(&sol.grid).len() {
        return Err(Error::VacuousNeighbourhood);
    }
    Ok(nb)
}

/// Tail mass outside a neighbourhood of `S_R*` decays exponentially in `n`:
/// passes when the fitted slope is negative with `R^2 >= 0.9`.
pub fn tail_mass_check<R: Rng + ?Sized>(
    sol: &EquilibriumSolution,
    ns: &[usize],
    beta: f64,
    dilation_cells: usize,
    trials: usize,
    rng: &mut R,
) -> Result<TailReport> {
    let nb = tail_neighbourhood(sol, dilation_cells)?;
    let real = sol.grid.domain.is_real();
    let mut ratio_out = Vec::with_capacity(ns.len());
    for &n in ns {
        let ratios: Vec<f64> = (0..trials.max(1))
            .map(|_| tail_ratio(sol, n, beta, &nb, &random_polynomial(n, real, false, rng)))
            .collect();
        ratio_out.push(median(&ratios));
    }
    let x: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    let y: Vec<f64> = ratio_out.iter().map(|r| r.ln()).collect();
    let (fit_slope, r2) = if ns.len() >= 2 && y.iter().all(|v| v.is_finite()) {
        let (_, s, r2) = linear_fit(&x, &y);
        (s, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(TailReport {
        ns: ns.to_vec(),
        ratio_out,
        fit_slope,
        r2,
        pass: fit_slope < 0.0 && r2 >= 0.9,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailIntegrability {
    pub exponent: f64,
    pub dimension: usize,
    pub unbounded: bool,
    /// `int_{Y, |z| >= 1} dtau / |z|^a` on the grid.
    pub partial_integral: f64,
    pub pass: bool,
}

/// Finiteness of `int_Y dtau / |z|^a` for tau a multiple of length or area
/// measure: automatic for bounded `Y`, otherwise `a` must exceed the dimension.
pub fn tail_integrability(grid: &DomainGrid, exponent: f64) -> TailIntegrability {
    let dimension = grid.domain.dimension();
    let partial_integral = grid
        .nodes
        .iter()
        .zip(&grid.tau_mass)
        .filter(|(z, _)| z.norm() >= 1.0)
        .map(|(z, m)| m / z.norm().powf(exponent))
        .sum();
    let pass = !grid.unbounded || exponent > dimension as f64;
    TailIntegrability {
        exponent,
        dimension,
        unbounded: grid.unbounded,
        partial_integral,
        pass,
    }
}

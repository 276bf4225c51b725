//! Probability vectors on grid nodes and empirical point measures.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Probability vector indexed by grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Accepts weights summing to one within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ZeroMass);
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("measure weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidInput(format!("measure weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("measure weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteMeasure { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalized(vec![1.0; n])
    }

    pub fn dirac(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::InvalidInput(format!("node {at} out of range")));
        }
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Ok(DiscreteMeasure { weights: w })
    }

    /// Uniform draw from the simplex (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        Self::normalized(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `sum_i w_i f(i)`.
    pub fn integrate(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| w * f(i))
            .sum()
    }
}

/// Equal-mass point measure `(1/n) sum_j delta(z_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub points: Vec<Complex64>,
    pub masses: Vec<f64>,
}

pub fn empirical_measure(points: &[Complex64]) -> EmpiricalMeasure {
    let m = 1.0 / points.len().max(1) as f64;
    EmpiricalMeasure {
        points: points.to_vec(),
        masses: vec![m; points.len()],
    }
}

/// Wasserstein-1 distance between two weighted point sets on the real line
/// (imaginary parts ignored), via the integral of `|F - G|`.
pub fn wasserstein1_real(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    let ta: f64 = a.iter().map(|p| p.1).sum();
    let tb: f64 = b.iter().map(|p| p.1).sum();
    events.extend(a.iter().map(|&(x, w)| (x, w / ta)));
    events.extend(b.iter().map(|&(x, w)| (x, -w / tb)));
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf_diff = 0.0;
    let mut dist = 0.0;
    for k in 0..events.len() {
        cdf_diff += events[k].1;
        if k + 1 < events.len() {
            dist += cdf_diff.abs() * (events[k + 1].0 - events[k].0);
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn construction_contract() {
        assert!(DiscreteMeasure::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![1.5, -0.5]).is_err());
        assert!(matches!(DiscreteMeasure::normalized(vec![0.0, 0.0]), Err(Error::ZeroMass)));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = DiscreteMeasure::random(50, &mut rng).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_masses() {
        let e = empirical_measure(&[Complex64::new(1.0, 0.0)]);
        assert_eq!(e.masses, vec![1.0]);
        let e = empirical_measure(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        assert!(e.masses.iter().all(|m| (m - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn wasserstein_shift() {
        let a = [(0.0, 1.0), (1.0, 1.0)];
        let b = [(0.5, 1.0), (1.5, 1.0)];
        assert!((wasserstein1_real(&a, &b) - 0.5).abs() < 1e-14);
        assert_eq!(wasserstein1_real(&a, &a), 0.0);
    }
}

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EnsembleConfig;
use crate::domain::{Domain, DomainGrid};
use crate::error::{Error, Result};
use crate::field::FieldSpec;

/// `beta sum_{i<j} log|z_i - z_j| - 2n sum_i Q(z_i)`; `-inf` on coincident points.
pub fn log_joint_density(points: &[Complex64], field: &FieldSpec) -> f64 {
    let n = points.len();
    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..i {
            let d = (points[i] - points[j]).norm();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            pair += d.ln();
        }
    }
    let q: f64 = points.iter().map(|z| field.q(*z)).sum();
    field.beta * pair - 2.0 * n as f64 * q
}

/// Log density of tau at `z` relative to the reference measure on `Y`.
pub fn log_tau_density(grid: &DomainGrid, z: Complex64) -> f64 {
    match &grid.domain {
        Domain::Discrete { points, masses } => points
            .iter()
            .zip(masses)
            .find(|(p, _)| (Complex64::new(p[0], p[1]) - z).norm() <= 1e-12)
            .map_or(f64::NEG_INFINITY, |(_, m)| m.ln()),
        _ => grid.tau_density.ln(),
    }
}

/// Point configuration with a cached log-gap matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleState {
    pub points: Vec<Complex64>,
    /// Full symmetric `n x n` matrix of `log|z_i - z_j|`, zero diagonal.
    log_gaps: Vec<f64>,
    pair_sum: f64,
    q_sum: f64,
    log_density: f64,
}

impl EnsembleState {
    pub fn new(points: Vec<Complex64>, field: &FieldSpec) -> Self {
        let n = points.len();
        let mut log_gaps = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = (points[i] - points[j]).norm().ln();
                log_gaps[i * n + j] = v;
                log_gaps[j * n + i] = v;
            }
        }
        let mut s = EnsembleState {
            points,
            log_gaps,
            pair_sum: 0.0,
            q_sum: 0.0,
            log_density: 0.0,
        };
        s.refresh(field);
        s
    }

    /// Distinct uniform draws from `Y`.
    pub fn random<R: Rng + ?Sized>(n: usize, domain: &Domain, field: &FieldSpec, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("ensemble needs n >= 1".into()));
        }
        let mut pts: Vec<Complex64> = Vec::with_capacity(n);
        let mut guard = 0;
        while pts.len() < n {
            let z = domain.sample_uniform(rng);
            if pts.iter().all(|p| (p - z).norm() > 0.0) {
                pts.push(z);
            }
            guard += 1;
            if guard > 1000 * n {
                return Err(Error::InvalidInput(format!(
                    "cannot place {n} distinct points in the domain"
                )));
            }
        }
        Ok(Self::new(pts, field))
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn log_density(&self) -> f64 {
        self.log_density
    }

    #[inline]
    pub fn log_gap(&self, i: usize, j: usize) -> f64 {
        self.log_gaps[i * self.points.len() + j]
    }

    /// Recompute the cached sums from the gap matrix.
    pub fn refresh(&mut self, field: &FieldSpec) {
        let n = self.points.len();
        let mut pair = 0.0;
        for i in 0..n {
            for j in 0..i {
                pair += self.log_gaps[i * n + j];
            }
        }
        self.pair_sum = pair;
        self.q_sum = self.points.iter().map(|z| field.q(*z)).sum();
        self.log_density = field.beta * pair - 2.0 * n as f64 * self.q_sum;
        if pair.is_nan() {
            self.log_density = f64::NEG_INFINITY;
        }
    }

    /// Change in the log density when coordinate `k` moves to `z`, and the new gap row.
    pub fn delta_log_density(&self, k: usize, z: Complex64, field: &FieldSpec) -> (f64, Vec<f64>) {
        let n = self.points.len();
        let mut row = vec![0.0; n];
        let mut dpair = 0.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let d = (z - self.points[j]).norm();
            if d == 0.0 {
                return (f64::NEG_INFINITY, row);
            }
            let v = d.ln();
            row[j] = v;
            dpair += v - self.log_gaps[k * n + j];
        }
        let dq = field.q(z) - field.q(self.points[k]);
        (field.beta * dpair - 2.0 * n as f64 * dq, row)
    }

    fn apply_move(&mut self, k: usize, z: Complex64, row: &[f64], delta: f64, field: &FieldSpec) {
        let n = self.points.len();
        for j in 0..n {
            if j != k {
                self.pair_sum += row[j] - self.log_gaps[k * n + j];
                self.log_gaps[k * n + j] = row[j];
                self.log_gaps[j * n + k] = row[j];
            }
        }
        self.q_sum += field.q(z) - field.q(self.points[k]);
        self.points[k] = z;
        self.log_density += delta;
    }
}

/// Proposal geometry, fixed by the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Proposal {
    /// Gaussian step along the real axis.
    Real,
    /// Isotropic Gaussian step in the plane.
    Planar,
    /// Gaussian step in angle on a circle of the given radius.
    Circle(f64),
    /// Uniform choice among the atoms of a discrete `Y`.
    Atoms,
}

impl Proposal {
    pub fn for_domain(domain: &Domain) -> Self {
        match domain {
            Domain::Circle { radius } => Proposal::Circle(*radius),
            Domain::Discrete { .. } => Proposal::Atoms,
            d if d.is_real() => Proposal::Real,
            _ => Proposal::Planar,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, from: Complex64, scale: f64, domain: &Domain, rng: &mut R) -> Complex64 {
        match self {
            Proposal::Real => {
                let e: f64 = rng.sample(StandardNormal);
                Complex64::new(from.re + scale * e, 0.0)
            }
            Proposal::Planar => {
                let ex: f64 = rng.sample(StandardNormal);
                let ey: f64 = rng.sample(StandardNormal);
                from + Complex64::new(scale * ex, scale * ey)
            }
            Proposal::Circle(r) => {
                let e: f64 = rng.sample(StandardNormal);
                Complex64::from_polar(*r, from.arg() + scale / r * e)
            }
            Proposal::Atoms => {
                let Domain::Discrete { points, .. } = domain else {
                    return from;
                };
                let p = points[rng.random_range(0..points.len())];
                Complex64::new(p[0], p[1])
            }
        }
    }

    /// Log proposal density of `from -> to` up to a constant shared by both directions.
    pub fn log_density(&self, from: Complex64, to: Complex64, scale: f64) -> f64 {
        match self {
            Proposal::Real => -0.5 * ((to.re - from.re) / scale).powi(2),
            Proposal::Planar => -0.5 * ((to - from) / scale).norm_sqr(),
            Proposal::Circle(r) => {
                let mut d = (to.arg() - from.arg()).rem_euclid(2.0 * std::f64::consts::PI);
                if d > std::f64::consts::PI {
                    d = 2.0 * std::f64::consts::PI - d;
                }
                // wrapped normal truncated to its principal term
                -0.5 * (d * r / scale).powi(2)
            }
            Proposal::Atoms => 0.0,
        }
    }
}

/// Log Metropolis acceptance probability.
#[inline]
pub fn log_acceptance(log_target_from: f64, log_target_to: f64) -> f64 {
    if log_target_to == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        (log_target_to - log_target_from).min(0.0)
    }
}

/// Running Metropolis counters for one chain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub sweeps: usize,
    pub proposed: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub proposal_scale: f64,
    pub seed: u64,
    pub burn_in: usize,
}

/// One systematic-scan sweep of single-coordinate Metropolis updates.
/// Proposals leaving `Y` are rejected. Returns the number of accepted moves.
pub fn mcmc_sweep<R: Rng + ?Sized>(
    state: &mut EnsembleState,
    config: &EnsembleConfig,
    stats: &mut ChainStats,
    rng: &mut R,
) -> usize {
    let domain = &config.grid.domain;
    let proposal = Proposal::for_domain(domain);
    let field = &config.field;
    let mut accepted = 0;
    for k in 0..state.n() {
        let from = state.points[k];
        let to = proposal.draw(from, stats.proposal_scale, domain, rng);
        stats.proposed += 1;
        // the uniform is always drawn so the random stream does not depend on rejections
        let u: f64 = rng.random();
        if !domain.contains(to) {
            continue;
        }
        let (delta, row) = state.delta_log_density(k, to, field);
        if delta == f64::NEG_INFINITY {
            continue;
        }
        let dtau = log_tau_density(&config.grid, to) - log_tau_density(&config.grid, from);
        if u.ln() < delta + dtau {
            state.apply_move(k, to, &row, delta, field);
            accepted += 1;
        }
    }
    state.refresh(field);
    stats.sweeps += 1;
    stats.accepted += accepted as u64;
    stats.acceptance_rate = if stats.proposed > 0 {
        stats.accepted as f64 / stats.proposed as f64
    } else {
        0.0
    };
    accepted
}

/// Terms of `log pi(x) + log q(x -> y) + log alpha(x -> y)` for moving
/// coordinate `k` of `x` to `to`; the detailed-balance identity equates this
/// with the same expression for the reverse move.
pub fn detailed_balance_terms(
    state: &EnsembleState,
    k: usize,
    to: Complex64,
    config: &EnsembleConfig,
    scale: f64,
) -> (f64, f64) {
    let proposal = Proposal::for_domain(&config.grid.domain);
    let log_pi = |pts: &[Complex64]| {
        let tau: f64 = pts.iter().map(|z| log_tau_density(&config.grid, *z)).sum();
        log_joint_density(pts, &config.field) + tau
    };
    let x = state.points.clone();
    let mut y = x.clone();
    y[k] = to;
    let (px, py) = (log_pi(&x), log_pi(&y));
    let forward = px + proposal.log_density(x[k], to, scale) + log_acceptance(px, py);
    let backward = py + proposal.log_density(to, x[k], scale) + log_acceptance(py, px);
    (forward, backward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Window;
    use crate::field::Potential;
    use rand::SeedableRng;

    fn zero(beta: f64) -> FieldSpec {
        FieldSpec::new(beta, Potential::zero()).unwrap()
    }

    #[test]
    fn density_examples() {
        let q = FieldSpec::new(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap();
        let z = Complex64::new(1.5, 0.0);
        assert_eq!(log_joint_density(&[z], &q), -2.0 * q.q(z));
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        for beta in [0.5, 1.0, 2.0, 4.0] {
            assert_eq!(log_joint_density(&pts, &zero(beta)), 0.0);
        }
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)];
        assert!((log_joint_density(&pts, &zero(1.0)) - 2f64.ln()).abs() < 1e-15);
        let same = [Complex64::new(0.3, 0.0), Complex64::new(0.3, 0.0)];
        assert_eq!(log_joint_density(&same, &zero(1.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn coincident_proposal_is_rejected() {
        let field = zero(2.0);
        let s = EnsembleState::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], &field);
        let (d, _) = s.delta_log_density(0, Complex64::new(1.0, 0.0), &field);
        assert_eq!(d, f64::NEG_INFINITY);
        assert_eq!(log_acceptance(0.0, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn cache_tracks_moves() {
        let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 10).unwrap();
        let field = FieldSpec::new(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap();
        let cfg = EnsembleConfig::new(12, field.clone(), grid, Window::All).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut state = EnsembleState::random(12, &cfg.grid.domain, &field, &mut rng).unwrap();
        let mut stats = ChainStats {
            proposal_scale: 0.3,
            ..Default::default()
        };
        for _ in 0..200 {
            mcmc_sweep(&mut state, &cfg, &mut stats, &mut rng);
            let fresh = log_joint_density(&state.points, &field);
            assert!((state.log_density() - fresh).abs() <= 1e-9 * (1.0 + fresh.abs()));
        }
        assert!(stats.acceptance_rate > 0.0 && stats.acceptance_rate <= 1.0);
    }
}

use nalgebra::{DMatrix, DVector};

use super::energy::{field_on_nodes, Desingularization, LogKernel};
use super::support::support_sets;
use super::EquilibriumSolution;
use crate::domain::DomainGrid;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::measure::DiscreteMeasure;

/// Options for [`solve_equilibrium`].
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when the Frank–Wolfe gap falls below `gap_tol * |E|`.
    pub gap_tol: f64,
    /// Absolute floor on the stopping threshold.
    pub gap_floor: f64,
    /// Periodically solve the equality-constrained problem on the active set.
    pub polish: bool,
    pub initial: Option<DiscreteMeasure>,
    pub desing: Desingularization,
    /// Relative weight threshold for `S_R`.
    pub tol_weight: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 50_000,
            gap_tol: 1e-8,
            gap_floor: 1e-14,
            polish: true,
            initial: None,
            desing: Desingularization::CellScale,
            tol_weight: 1e-3,
        }
    }
}

const REFRESH_EVERY: usize = 1000;
const MIN_POLISH_INTERVAL: usize = 50;

struct State<'a> {
    kernel: &'a LogKernel,
    r: &'a [f64],
    allowed: &'a [bool],
    w: Vec<f64>,
    /// `A w`, i.e. `-U`.
    u: Vec<f64>,
}

impl State<'_> {
    fn energy(&self) -> f64 {
        self.w
            .iter()
            .zip(&self.u)
            .zip(self.r)
            .map(|((w, u), r)| w * (u + 2.0 * r))
            .sum()
    }

    fn refresh(&mut self) {
        self.u = self.kernel.apply(&self.w);
    }

    /// Gradient component `(A w + r)_i` (half the true gradient).
    #[inline]
    fn grad(&self, i: usize) -> f64 {
        self.u[i] + self.r[i]
    }

    fn mean_grad(&self) -> f64 {
        self.w
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| w * self.grad(i))
            .sum()
    }

    fn fw_vertex(&self) -> usize {
        let mut best = usize::MAX;
        let mut val = f64::INFINITY;
        for i in 0..self.w.len() {
            if self.allowed[i] {
                let g = self.grad(i);
                if g < val {
                    val = g;
                    best = i;
                }
            }
        }
        best
    }

    fn away_vertex(&self) -> usize {
        let mut best = usize::MAX;
        let mut val = f64::NEG_INFINITY;
        for (i, &w) in self.w.iter().enumerate() {
            if w > 0.0 {
                let g = self.grad(i);
                if g > val {
                    val = g;
                    best = i;
                }
            }
        }
        best
    }

    /// Move along `e_s - w` (Frank–Wolfe) or `w - e_a` (away) with exact line search.
    fn step(&mut self, s: usize, away: bool) {
        let wu: f64 = self.w.iter().zip(&self.u).map(|(w, u)| w * u).sum();
        let (slope, curv, gmax) = if away {
            let wa = self.w[s];
            let slope = self.mean_grad() - self.grad(s);
            let curv = wu - 2.0 * self.u[s] + self.kernel.get(s, s);
            (slope, curv, wa / (1.0 - wa))
        } else {
            let slope = self.grad(s) - self.mean_grad();
            let curv = self.kernel.get(s, s) - 2.0 * self.u[s] + wu;
            (slope, curv, 1.0)
        };
        if slope >= 0.0 {
            return;
        }
        let gamma = if curv > 0.0 {
            (-slope / curv).min(gmax)
        } else {
            gmax
        };
        if !(gamma > 0.0) {
            return;
        }
        let row = self.kernel.row(s);
        if away {
            let full = gamma >= gmax;
            for i in 0..self.w.len() {
                self.w[i] *= 1.0 + gamma;
                self.u[i] = (1.0 + gamma) * self.u[i] - gamma * row[i];
            }
            self.w[s] -= gamma;
            if full || self.w[s] < 0.0 {
                self.w[s] = 0.0;
            }
        } else {
            for i in 0..self.w.len() {
                self.w[i] *= 1.0 - gamma;
                self.u[i] = (1.0 - gamma) * self.u[i] + gamma * row[i];
            }
            self.w[s] += gamma;
        }
    }

    /// Minimise on the affine hull of the current support, keeping feasibility
    /// by a ratio test. Each pass removes at least one blocking node.
    fn polish(&mut self) {
        for _ in 0..64 {
            let s: Vec<usize> = (0..self.w.len()).filter(|&i| self.w[i] > 0.0).collect();
            let k = s.len();
            if k < 2 {
                return;
            }
            let m = DMatrix::from_fn(k + 1, k + 1, |a, b| match (a < k, b < k) {
                (true, true) => self.kernel.get(s[a], s[b]),
                (true, false) => -1.0,
                (false, true) => 1.0,
                (false, false) => 0.0,
            });
            let rhs = DVector::from_fn(k + 1, |a, _| if a < k { -self.r[s[a]] } else { 1.0 });
            let Some(sol) = m.lu().solve(&rhs) else {
                return;
            };
            if sol.iter().any(|v| !v.is_finite()) {
                return;
            }
            let mut t = 1.0;
            let mut blocking = None;
            for (a, &i) in s.iter().enumerate() {
                let x = sol[a];
                if x <= 0.0 {
                    let ti = self.w[i] / (self.w[i] - x);
                    if ti < t {
                        t = ti;
                        blocking = Some(i);
                    }
                }
            }
            for (a, &i) in s.iter().enumerate() {
                self.w[i] += t * (sol[a] - self.w[i]);
                if self.w[i] <= 0.0 {
                    self.w[i] = 0.0;
                }
            }
            if let Some(b) = blocking {
                self.w[b] = 0.0;
            }
            let total: f64 = self.w.iter().sum();
            for w in &mut self.w {
                *w /= total;
            }
            if blocking.is_none() {
                return;
            }
        }
    }
}

/// Minimise the discrete weighted energy over the probability simplex on the
/// grid nodes with positive tau mass.
pub fn solve_equilibrium(
    grid: &DomainGrid,
    field: &FieldSpec,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    grid.validate()?;
    field.validate()?;
    let r = field_on_nodes(grid, field)?;
    let allowed: Vec<bool> = grid.tau_mass.iter().map(|m| *m > 0.0).collect();
    if allowed.iter().filter(|a| **a).count() < 2 {
        return Err(Error::InvalidInput(
            "need at least two nodes with positive tau mass".into(),
        ));
    }
    let n = grid.nodes.len();
    let kernel = LogKernel::new(grid, opts.desing);
    let w0 = match &opts.initial {
        Some(m) => {
            if m.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.len(),
                });
            }
            let mut w: Vec<f64> = m.weights().to_vec();
            for (wi, a) in w.iter_mut().zip(&allowed) {
                if !a {
                    *wi = 0.0;
                }
            }
            DiscreteMeasure::normalized(w)?.into_weights()
        }
        None => {
            let start = (0..n)
                .filter(|&i| allowed[i])
                .min_by(|&a, &b| r[a].total_cmp(&r[b]))
                .unwrap_or(0);
            DiscreteMeasure::dirac(n, start)?.into_weights()
        }
    };
    let mut st = State {
        kernel: &kernel,
        r: &r,
        allowed: &allowed,
        w: w0,
        u: vec![],
    };
    st.refresh();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut next_polish = MIN_POLISH_INTERVAL;
    for it in 0..opts.max_iters {
        iterations = it;
        let e = st.energy();
        trace.push(e);
        let s = st.fw_vertex();
        let a = st.away_vertex();
        let mean = st.mean_grad();
        // true gradient is 2(Aw + r)
        gap = 2.0 * (mean - st.grad(s));
        let threshold = (opts.gap_tol * e.abs()).max(opts.gap_floor);
        if gap <= threshold {
            converged = true;
            break;
        }
        let away_gap = st.grad(a) - mean;
        if away_gap > mean - st.grad(s) && st.w[a] < 1.0 {
            st.step(a, true);
        } else {
            st.step(s, false);
        }
        if (it + 1) % REFRESH_EVERY == 0 {
            st.refresh();
        }
        if opts.polish && it + 1 >= next_polish {
            st.polish();
            st.refresh();
            let k = st.w.iter().filter(|w| **w > 0.0).count();
            next_polish = it + 1 + MIN_POLISH_INTERVAL.max(k / 2);
        }
    }
    if !converged {
        iterations = opts.max_iters;
        log::warn!("equilibrium solver hit the iteration cap; gap {gap:.3e}");
    }
    st.refresh();
    let energy = st.energy();
    trace.push(energy);
    let w = st.w;
    let u = st.u;
    let measure = DiscreteMeasure::normalized(w)?;
    let potential_values: Vec<f64> = u.iter().map(|v| -v).collect();
    let rho = measure.integrate(|i| r[i] - potential_values[i]);
    let mut sol = EquilibriumSolution {
        grid: grid.clone(),
        field: field.clone(),
        measure,
        rho,
        potential_values,
        r_values: r,
        support_sr: vec![],
        support_srstar: vec![],
        kkt_residual: 0.0,
        iterations,
        converged,
        energy,
        energy_trace: trace,
        duality_gap: gap,
        tol_weight: opts.tol_weight,
    };
    sol.kkt_residual = sol.kkt_residual_for(&sol.support_by_weight(opts.tol_weight));
    let (sr, srstar) = support_sets(&sol, opts.tol_weight, sol.default_tol_eq());
    sol.support_sr = sr;
    sol.support_srstar = srstar;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::field::Potential;
    use crate::potential::weighted_energy;
    use rand::SeedableRng;

    fn quadratic_real() -> FieldSpec {
        FieldSpec::from_weight_exponent(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap()
    }

    #[test]
    fn energy_trace_non_increasing() {
        let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 300).unwrap();
        let sol = solve_equilibrium(&grid, &quadratic_real(), &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        for w in sol.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn minimality_against_random_measures() {
        let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 120).unwrap();
        let f = quadratic_real();
        let sol = solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = DiscreteMeasure::random(grid.len(), &mut rng).unwrap();
            assert!(sol.energy <= weighted_energy(&m, &grid, &f).unwrap() + 1e-10);
        }
        let direct = weighted_energy(&sol.measure, &grid, &f).unwrap();
        assert!((direct - sol.energy).abs() < 1e-10);
    }

    #[test]
    fn plain_frank_wolfe_reaches_same_minimum() {
        let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 80).unwrap();
        let f = quadratic_real();
        let polished = solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap();
        let plain = solve_equilibrium(
            &grid,
            &f,
            &SolverOptions {
                polish: false,
                max_iters: 20_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((plain.energy - polished.energy).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_finite_field() {
        let grid = DomainGrid::cells(&Domain::interval(-1.0, 1.0), 10).unwrap();
        let f = FieldSpec::new(
            2.0,
            Potential::Tabulated {
                points: vec![[0.0, 0.0]],
                values: vec![f64::NAN],
            },
        )
        .unwrap();
        assert!(matches!(
            solve_equilibrium(&grid, &f, &SolverOptions::default()),
            Err(Error::NonFiniteField { .. })
        ));
    }

    #[test]
    fn rejects_massless_grid() {
        let mut grid = DomainGrid::cells(&Domain::interval(-1.0, 1.0), 10).unwrap();
        grid.tau_mass = vec![0.0; 10];
        assert!(matches!(
            solve_equilibrium(&grid, &quadratic_real(), &SolverOptions::default()),
            Err(Error::ZeroMass)
        ));
    }
}

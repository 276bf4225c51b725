use num_complex::Complex64;

use crate::domain::DomainGrid;
use crate::error::{Error, Result};
use crate::field::FieldSpec;

/// A new direction is singular when its norm after orthogonalisation falls
/// below this fraction of its norm before.
const SINGULAR_RATIO: f64 = 1e-10;

/// Orthonormal polynomials `phi_0..phi_n` for the inner product
/// `sum_i tau_i exp(-2n R(z_i)) f(z_i) conj(g(z_i))`.
///
/// Built by Arnoldi: `phi_{k+1}` is `z phi_k` orthogonalised (twice) against
/// `phi_0..phi_k`. The Hessenberg coefficients evaluate the basis anywhere.
/// Weights are stored relative to `exp(-2n min R)`; the shift cancels in every
/// weighted quantity reported.
#[derive(Clone, Debug)]
pub struct WeightedBasis {
    pub degree: usize,
    /// `values[k][i] = phi_k(z_i)` (for the shifted weight).
    pub values: Vec<Vec<Complex64>>,
    /// `weights[i] = tau_i exp(-2n (R(z_i) - r_min))`.
    pub weights: Vec<f64>,
    /// `log exp(-2n (R(z_i) - r_min))`, without the tau mass.
    pub log_weight: Vec<f64>,
    pub r_min: f64,
    /// `hess[k][j]`: coefficient of `phi_j` in `z phi_k`, `j <= k + 1`.
    pub hess: Vec<Vec<Complex64>>,
    /// Largest loss factor `|z phi_k| / |new direction|` over the construction.
    pub gram_condition: f64,
    nodes: Vec<Complex64>,
    tau_mass: Vec<f64>,
}

fn inner(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y.conj() * *w).sum()
}

impl WeightedBasis {
    /// Basis of degree `n` for the weight `exp(-2n R)` on the grid.
    pub fn build(grid: &DomainGrid, field: &FieldSpec, n: usize) -> Result<Self> {
        Self::build_with_exponent(grid, field, n, n)
    }

    /// Basis of degree `n` for the weight `exp(-2 m R)`.
    pub fn build_with_exponent(grid: &DomainGrid, field: &FieldSpec, n: usize, m: usize) -> Result<Self> {
        grid.validate()?;
        let r: Vec<f64> = grid.nodes.iter().map(|z| field.r(*z)).collect();
        if let Some(node) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { node });
        }
        let r_min = r
            .iter()
            .zip(&grid.tau_mass)
            .filter(|(_, m)| **m > 0.0)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        let two_m = 2.0 * m as f64;
        let log_weight: Vec<f64> = r.iter().map(|v| -two_m * (v - r_min)).collect();
        let weights: Vec<f64> = log_weight
            .iter()
            .zip(&grid.tau_mass)
            .map(|(lw, t)| t * lw.exp())
            .collect();
        let nodes = grid.nodes.clone();
        let norm0 = weights.iter().sum::<f64>().sqrt();
        if !(norm0 > 0.0) {
            return Err(Error::SingularGram { degree: 0 });
        }
        let mut values = vec![vec![Complex64::new(1.0 / norm0, 0.0); nodes.len()]];
        let mut hess = Vec::with_capacity(n);
        let mut gram_condition: f64 = 1.0;
        for k in 0..n {
            let mut v: Vec<Complex64> = values[k].iter().zip(&nodes).map(|(p, z)| p * z).collect();
            let before = inner(&v, &v, &weights).re.sqrt();
            let mut h = vec![Complex64::new(0.0, 0.0); k + 2];
            for _ in 0..2 {
                for (j, phi) in values.iter().enumerate() {
                    let c = inner(&v, phi, &weights);
                    h[j] += c;
                    for (x, p) in v.iter_mut().zip(phi) {
                        *x -= c * p;
                    }
                }
            }
            let after = inner(&v, &v, &weights).re.sqrt();
            if !(after > SINGULAR_RATIO * before) {
                return Err(Error::SingularGram { degree: k + 1 });
            }
            gram_condition = gram_condition.max(before / after);
            h[k + 1] = Complex64::new(after, 0.0);
            for x in v.iter_mut() {
                *x /= after;
            }
            values.push(v);
            hess.push(h);
        }
        Ok(WeightedBasis {
            degree: n,
            values,
            weights,
            log_weight,
            r_min,
            hess,
            gram_condition,
            nodes,
            tau_mass: grid.tau_mass.clone(),
        })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// `phi_0(z), ..., phi_n(z)` by the Arnoldi recurrence.
    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.degree + 1);
        out.push(self.values[0][0]);
        for (k, h) in self.hess.iter().enumerate() {
            let mut v = z * out[k];
            for (j, c) in h.iter().take(k + 1).enumerate() {
                v -= c * out[j];
            }
            out.push(v / h[k + 1]);
        }
        out
    }

    /// Largest `|<phi_j, phi_k> - delta_jk|` on the grid.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.values.len() {
            for k in 0..=j {
                let g = inner(&self.values[j], &self.values[k], &self.weights);
                let d = if j == k { g - 1.0 } else { g };
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `log(exp(-2n R(z_i)) sum_k |phi_k(z_i)|^2)` up to the common shift.
    fn log_christoffel(&self) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|i| {
                let s: f64 = self.values.iter().map(|phi| phi[i].norm_sqr()).sum();
                s.ln() + self.log_weight[i]
            })
            .collect()
    }
}

/// `M_n = max_i (exp(-2n R(z_i)) sum_k |phi_k(z_i)|^2)^{1/2}` over nodes with
/// positive mass, with the node where it is attained.
pub fn bm_constant(basis: &WeightedBasis) -> (f64, usize) {
    let lc = basis.log_christoffel();
    let (arg, best) = lc
        .iter()
        .enumerate()
        .filter(|(i, _)| basis.tau_mass[*i] > 0.0)
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    ((0.5 * best).exp(), arg)
}

/// For the kernel polynomial `p = sum_k conj(phi_k(z*)) phi_k` at the node
/// `z*` attaining `M_n`: `max_i exp(-nR(z_i)) |p(z_i)| / ||p||_2`.
pub fn kernel_sup_ratio(basis: &WeightedBasis) -> f64 {
    let (_, arg) = bm_constant(basis);
    let coeffs: Vec<Complex64> = basis.values.iter().map(|phi| phi[arg].conj()).collect();
    let l2 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    (0..basis.nodes.len())
        .map(|i| {
            let p: Complex64 = coeffs.iter().zip(&basis.values).map(|(c, phi)| c * phi[i]).sum();
            p.norm() * (0.5 * basis.log_weight[i]).exp()
        })
        .fold(0.0, f64::max)
        / l2
}

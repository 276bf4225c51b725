use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{field_tag, PartitionMethod, PartitionRecord};
use crate::domain::{Domain, DomainGrid, RuleSpec, Window};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::quadrature::gauss_legendre;

/// Largest `n` handled by tensor quadrature.
pub const MAX_EXACT_N: usize = 3;

/// Panel width of the line rule.
const LINE_PANEL: f64 = 0.5;

/// `log Z_n` together with symmetric observables of the `n`-point law.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmallNQuadrature {
    pub n: usize,
    pub log_z: f64,
    /// `|log Z(order) - log Z(2 order)|`.
    pub error: f64,
    /// `Prob{z_1 in W}`.
    pub psi: f64,
    /// `Prob{some z_j in W}`.
    pub psi_any: f64,
    /// `E[x_1^2]` on the line, `E[|z_1|^2]` in the plane.
    pub mean_z1_sq: f64,
}

/// Sums of `A`, `A * #{j: z_j in W}`, `A * 1{some z_j in W}` and `A * sum |z_j|^2`,
/// each relative to `exp(shift)`.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    shift: f64,
    z: f64,
    count: f64,
    any: f64,
    sq: f64,
}

impl Moments {
    fn finish(self, n: usize) -> Result<SmallNQuadrature> {
        if !(self.z > 0.0) {
            return Err(Error::InvalidInput("partition function underflowed to zero".into()));
        }
        let nf = n as f64;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        Ok(SmallNQuadrature {
            n,
            log_z: self.shift + self.z.ln() + fact.ln(),
            error: 0.0,
            psi: self.count / (nf * self.z),
            psi_any: self.any / self.z,
            mean_z1_sq: self.sq / (nf * self.z),
        })
    }
}

fn observe(points: &[Complex64], window: &Window) -> (f64, f64, f64) {
    let count = points.iter().filter(|z| window.contains(**z)).count() as f64;
    let sq = points.iter().map(|z| z.norm_sqr()).sum();
    (count, if count > 0.0 { 1.0 } else { 0.0 }, sq)
}

/// Ordered nested Gauss–Legendre integration on a union of intervals:
/// `x_1 < x_2 < ... < x_n`, each variable's range split at every breakpoint.
fn ordered_line(intervals: &[[f64; 2]], breaks: &[f64], field: &FieldSpec, window: &Window, n: usize, order: usize, log_tau: f64) -> Moments {
    let (gx, gw) = gauss_legendre(order);
    let mut cuts: Vec<f64> = breaks.to_vec();
    for iv in intervals {
        let panels = ((iv[1] - iv[0]) / LINE_PANEL).ceil().max(1.0) as usize;
        let h = (iv[1] - iv[0]) / panels as f64;
        cuts.extend((0..=panels).map(|k| iv[0] + k as f64 * h));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let beta = field.beta;
    let two_n = 2.0 * n as f64;
    // panels of Y above `lower`
    let panels_above = |lower: f64| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for iv in intervals {
            let a = iv[0].max(lower);
            if a >= iv[1] {
                continue;
            }
            let mut edges = vec![a];
            edges.extend(cuts.iter().copied().filter(|&c| c > a && c < iv[1]));
            edges.push(iv[1]);
            out.extend(edges.windows(2).map(|e| (e[0], e[1])));
        }
        out
    };
    // upper bound on the log integrand for a stable shift
    let mut shift = f64::NEG_INFINITY;
    let lo = intervals.iter().map(|i| i[0]).fold(f64::INFINITY, f64::min);
    let hi = intervals.iter().map(|i| i[1]).fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-300);
    for (a, b) in panels_above(f64::NEG_INFINITY) {
        for &t in &gx {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            shift = shift.max(-two_n * field.q(Complex64::new(x, 0.0)));
        }
    }
    let pair_bound = 0.5 * (n * (n - 1)) as f64 * beta * span.ln().max(0.0);
    shift = n as f64 * (shift + log_tau) + pair_bound;

    let mut m = Moments {
        shift,
        ..Default::default()
    };
    let mut xs = vec![0.0; n];
    fn recurse(
        level: usize,
        lower: f64,
        log_acc: f64,
        xs: &mut Vec<f64>,
        ctx: &dyn Fn(f64) -> Vec<(f64, f64)>,
        eval: &mut dyn FnMut(&[f64], f64),
        gx: &[f64],
        gw: &[f64],
        term: &dyn Fn(usize, f64, &[f64]) -> f64,
    ) {
        let n = xs.len();
        for (a, b) in ctx(lower) {
            let h = 0.5 * (b - a);
            for (t, w) in gx.iter().zip(gw) {
                let x = 0.5 * (a + b) + h * t;
                xs[level] = x;
                let lt = log_acc + (h * w).ln() + term(level, x, xs);
                if level + 1 == n {
                    eval(xs, lt);
                } else {
                    recurse(level + 1, x, lt, xs, ctx, eval, gx, gw, term);
                }
            }
        }
    }
    let term = |level: usize, x: f64, xs: &[f64]| -> f64 {
        let mut s = -two_n * field.q(Complex64::new(x, 0.0)) + log_tau;
        for &y in &xs[..level] {
            s += beta * (x - y).abs().ln();
        }
        s
    };
    let mut eval = |xs: &[f64], lt: f64| {
        let a = (lt - shift).exp();
        if a == 0.0 || !a.is_finite() {
            return;
        }
        let pts: Vec<Complex64> = xs.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let (count, any, sq) = observe(&pts, window);
        m.z += a;
        m.count += a * count;
        m.any += a * any;
        m.sq += a * sq;
    };
    recurse(0, f64::NEG_INFINITY, 0.0, &mut xs, &panels_above, &mut eval, &gx, &gw, &term);
    m
}

/// Sum over strictly increasing index tuples of a symmetric tensor rule.
fn tensor_rule(nodes: &[Complex64], log_w: &[f64], field: &FieldSpec, window: &Window, n: usize) -> Moments {
    let k = nodes.len();
    let beta = field.beta;
    let two_n = 2.0 * n as f64;
    let base: Vec<f64> = nodes
        .iter()
        .zip(log_w)
        .map(|(z, lw)| lw - two_n * field.q(*z))
        .collect();
    let mut pair = vec![0.0; k * k];
    let mut pmax = f64::NEG_INFINITY;
    for i in 0..k {
        for j in 0..i {
            let v = beta * (nodes[i] - nodes[j]).norm().ln();
            pair[i * k + j] = v;
            pair[j * k + i] = v;
            pmax = pmax.max(v);
        }
    }
    let bmax = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let npairs = (n * (n - 1) / 2) as f64;
    let shift = n as f64 * bmax + npairs * pmax.max(0.0);
    let inw: Vec<bool> = nodes.iter().map(|z| window.contains(*z)).collect();
    let sq: Vec<f64> = nodes.iter().map(|z| z.norm_sqr()).collect();
    let mut m = Moments {
        shift,
        ..Default::default()
    };
    let mut add = |idx: &[usize], lt: f64| {
        let a = (lt - shift).exp();
        let count = idx.iter().filter(|&&i| inw[i]).count() as f64;
        m.z += a;
        m.count += a * count;
        m.any += if count > 0.0 { a } else { 0.0 };
        m.sq += a * idx.iter().map(|&i| sq[i]).sum::<f64>();
    };
    match n {
        1 => {
            for i in 0..k {
                add(&[i], base[i]);
            }
        }
        2 => {
            for i in 0..k {
                for j in 0..i {
                    add(&[i, j], base[i] + base[j] + pair[i * k + j]);
                }
            }
        }
        _ => {
            for i in 0..k {
                for j in 0..i {
                    let bij = base[i] + base[j] + pair[i * k + j];
                    for l in 0..j {
                        add(&[i, j, l], bij + base[l] + pair[i * k + l] + pair[j * k + l]);
                    }
                }
            }
        }
    }
    m
}

fn planar_spec(order: usize, breaks: Vec<f64>) -> RuleSpec {
    RuleSpec::new(order, 1.0).with_angular(4 * order).with_breaks(breaks)
}

fn integrate_once(grid: &DomainGrid, field: &FieldSpec, window: &Window, n: usize, order: usize) -> Result<SmallNQuadrature> {
    let log_tau = grid.tau_density.ln();
    let m = match &grid.domain {
        Domain::Intervals { .. } => {
            let ivs = grid.domain.sorted_intervals().unwrap_or_default();
            ordered_line(&ivs, &window.breakpoints(), field, window, n, order, log_tau)
        }
        Domain::Discrete { points, masses } => {
            let nodes: Vec<Complex64> = points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
            let lw: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
            tensor_rule(&nodes, &lw, field, window, n)
        }
        domain => {
            let spec = match domain {
                Domain::Circle { .. } => RuleSpec::new(1, 1.0).with_angular(8 * order),
                Domain::Rectangle { .. } => RuleSpec::new(order, 1.0).with_breaks(window.breakpoints()),
                _ => planar_spec(order, window.breakpoints()),
            };
            let g = DomainGrid::quadrature(domain, &spec)?;
            let lw: Vec<f64> = g.tau_mass.iter().map(|m| m.ln() + log_tau).collect();
            tensor_rule(&g.nodes, &lw, field, window, n)
        }
    };
    m.finish(n)
}

/// `log Z_n` and observables for `n <= 3` by tensor quadrature at `order` and
/// `2 * order`; the finer result is returned with the difference as error.
pub fn small_n_quadrature(grid: &DomainGrid, field: &FieldSpec, window: &Window, n: usize, order: usize) -> Result<SmallNQuadrature> {
    if n == 0 || n > MAX_EXACT_N {
        return Err(Error::PartitionSizeRefused(n));
    }
    let coarse = integrate_once(grid, field, window, n, order)?;
    if matches!(grid.domain, Domain::Discrete { .. }) {
        return Ok(coarse);
    }
    let mut fine = integrate_once(grid, field, window, n, 2 * order)?;
    fine.error = (fine.log_z - coarse.log_z).abs();
    Ok(fine)
}

/// `log Z_{n,beta,Q}` for `n <= 3`.
pub fn exact_partition_small_n(grid: &DomainGrid, field: &FieldSpec, n: usize, order: usize) -> Result<PartitionRecord> {
    let q = small_n_quadrature(grid, field, &Window::All, n, order)?;
    Ok(PartitionRecord {
        n,
        beta: field.beta,
        field_tag: field_tag(field),
        method: PartitionMethod::Quadrature,
        log_value: q.log_z,
        error: q.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Potential;

    fn zero(beta: f64) -> FieldSpec {
        FieldSpec::new(beta, Potential::zero()).unwrap()
    }

    fn unit() -> DomainGrid {
        DomainGrid::cells(&Domain::interval(0.0, 1.0), 4).unwrap()
    }

    #[test]
    fn closed_form_unit_interval() {
        let z1 = exact_partition_small_n(&unit(), &zero(2.0), 1, 8).unwrap();
        assert!(z1.log_value.abs() < 1e-14);
        let z2 = exact_partition_small_n(&unit(), &zero(2.0), 2, 8).unwrap();
        assert!((z2.log_value.exp() - 1.0 / 6.0).abs() < 1e-10);
        let z2 = exact_partition_small_n(&unit(), &zero(1.0), 2, 8).unwrap();
        assert!((z2.log_value.exp() - 1.0 / 3.0).abs() < 1e-10);
        // int_{[0,1]^3} |x-y||x-z||y-z| dx dy dz = 1/30
        let z3 = exact_partition_small_n(&unit(), &zero(1.0), 3, 8).unwrap();
        assert!((z3.log_value.exp() - 1.0 / 30.0).abs() < 1e-10, "{}", z3.log_value.exp());
    }

    #[test]
    fn refuses_large_n() {
        assert!(matches!(exact_partition_small_n(&unit(), &zero(2.0), 4, 8), Err(Error::PartitionSizeRefused(4))));
    }

    #[test]
    fn circle_matches_dyson_constant() {
        // Z_n = (2 pi)^n n! for beta = 2 with arc-length tau
        let grid = DomainGrid::cells(&Domain::Circle { radius: 1.0 }, 16).unwrap();
        for n in 1..=3 {
            let z = exact_partition_small_n(&grid, &zero(2.0), n, 4).unwrap();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let exact = n as f64 * (2.0 * std::f64::consts::PI).ln() + fact.ln();
            assert!((z.log_value - exact).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn window_observables_line() {
        let grid = DomainGrid::cells(&Domain::interval(0.0, 1.0), 4).unwrap();
        let w = Window::Intervals { intervals: vec![[0.0, 0.5]] };
        let q = small_n_quadrature(&grid, &zero(2.0), &w, 2, 8).unwrap();
        assert!((q.psi - 0.5).abs() < 1e-10);
        // E[x^2] under the density 6 (x-y)^2
        let exact = 6.0 * (1.0 / 5.0 - 1.0 / 4.0 + 1.0 / 9.0);
        assert!((q.mean_z1_sq - exact).abs() < 1e-10, "{} vs {exact}", q.mean_z1_sq);
    }

    #[test]
    fn tau_scaling_leaves_probabilities_unchanged() {
        let field = FieldSpec::new(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 1.0] }).unwrap();
        let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 4).unwrap();
        let w = Window::Intervals { intervals: vec![[2.2, 3.0]] };
        let a = small_n_quadrature(&grid, &field, &w, 2, 12).unwrap();
        let b = small_n_quadrature(&grid.clone().with_tau_scale(7.5), &field, &w, 2, 12).unwrap();
        assert!((a.psi - b.psi).abs() <= 1e-12 * a.psi);
        assert!((b.log_z - a.log_z - 2.0 * 7.5f64.ln()).abs() < 1e-10);
    }
}

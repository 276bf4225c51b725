use num_complex::Complex64;

use super::EnsembleConfig;
use crate::domain::{Domain, DomainGrid, RuleSpec};
use crate::error::Result;
use crate::quadrature::LogSumExp;

/// Rings (or panels) of a quadrature rule on `Y`, ordered by radius for planar sets.
struct Ring {
    radius: f64,
    nodes: Vec<Complex64>,
    /// `log tau weight - 2n Q(w)`.
    log_w: Vec<f64>,
    in_w: Vec<bool>,
}

/// Quadrature for the one-point conditional law
/// `w -> prod_j |w - z_j|^beta exp(-2n Q(w)) dtau(w)`.
pub struct ConditionalRule {
    rings: Vec<Ring>,
    planar: bool,
    last_window_ring: usize,
}

/// Terms this far below the running total end the outward sweep.
const NEGLIGIBLE: f64 = 40.0;

/// `sum_j log|w - z_j|`, taking one logarithm per block of squared distances.
pub fn sum_log_dist(w: Complex64, others: &[Complex64]) -> f64 {
    let mut total = 0.0;
    for block in others.chunks(8) {
        let mut prod = 1.0;
        for z in block {
            prod *= (w - z).norm_sqr();
        }
        if prod.is_normal() {
            total += prod.ln();
        } else {
            for z in block {
                total += (w - z).norm_sqr().ln();
            }
        }
    }
    0.5 * total
}

impl ConditionalRule {
    pub fn new(config: &EnsembleConfig) -> Result<Self> {
        let n = config.n as f64;
        let domain = &config.grid.domain;
        let breaks = config.window.breakpoints();
        let planar = matches!(domain, Domain::Disc { .. } | Domain::Annulus { .. });
        let spec = match domain {
            Domain::Intervals { .. } | Domain::Rectangle { .. } => {
                RuleSpec::new(8, n.max(4.0)).with_breaks(breaks)
            }
            Domain::Circle { .. } => RuleSpec::new(1, 1.0).with_angular((8 * config.n).max(64)),
            _ => {
                let angular = (2 * config.n + 32).div_ceil(4) * 4;
                RuleSpec::new(4, (0.5 * n).max(8.0))
                    .with_angular(angular)
                    .with_breaks(breaks)
            }
        };
        let g = DomainGrid::quadrature(domain, &spec)?;
        let log_density = config.grid.tau_density.ln();
        let mut rings: Vec<Ring> = Vec::new();
        for (z, m) in g.nodes.iter().zip(&g.tau_mass) {
            // atom masses already carry any rescaling of tau
            let lw = if matches!(domain, Domain::Discrete { .. }) {
                m.ln()
            } else {
                m.ln() + log_density
            };
            let radius = if planar { z.norm() } else { 0.0 };
            let fresh = match rings.last() {
                Some(r) => planar && (r.radius - radius).abs() > 1e-12 * (1.0 + radius),
                None => true,
            };
            if fresh {
                rings.push(Ring {
                    radius,
                    nodes: vec![],
                    log_w: vec![],
                    in_w: vec![],
                });
            }
            let ring = rings.last_mut().expect("ring present");
            ring.nodes.push(*z);
            ring.log_w.push(lw - 2.0 * n * config.field.q(*z));
            ring.in_w.push(config.window.contains(*z));
        }
        if planar {
            rings.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        }
        let last_window_ring = rings
            .iter()
            .rposition(|r| r.in_w.iter().any(|b| *b))
            .unwrap_or(0);
        Ok(ConditionalRule {
            rings,
            planar,
            last_window_ring,
        })
    }

    /// `log` of the numerator (`w in W`) and denominator (`w in Y`) integrals
    /// for coordinate `k` given the others.
    pub fn log_integrals(&self, points: &[Complex64], k: usize, config: &EnsembleConfig) -> (f64, f64) {
        let beta = config.field.beta;
        let others: Vec<Complex64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, z)| *z)
            .collect();
        let rmax = others.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut num = LogSumExp::default();
        let mut den = LogSumExp::default();
        let mut quiet = 0;
        for (ri, ring) in self.rings.iter().enumerate() {
            let mut ring_max = f64::NEG_INFINITY;
            for ((w, lw), inside) in ring.nodes.iter().zip(&ring.log_w).zip(&ring.in_w) {
                let t = beta * sum_log_dist(*w, &others) + lw;
                if t.is_nan() {
                    continue;
                }
                ring_max = ring_max.max(t);
                den.add(t);
                if *inside {
                    num.add(t);
                }
            }
            if self.planar && ri > self.last_window_ring && ring.radius > rmax {
                if ring_max < den.value() - NEGLIGIBLE {
                    quiet += 1;
                    if quiet >= 2 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
        }
        (num.value(), den.value())
    }

    pub fn probability(&self, points: &[Complex64], k: usize, config: &EnsembleConfig) -> f64 {
        let (num, den) = self.log_integrals(points, k, config);
        if num == f64::NEG_INFINITY {
            0.0
        } else {
            (num - den).exp().min(1.0)
        }
    }
}

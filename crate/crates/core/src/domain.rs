//! The set `Y`, its discretisations, and query windows `W`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

const CONTAIN_EPS: f64 = 1e-12;

/// Bounded domain catalogue. Unbounded sets are represented by their
/// truncation (see [`DomainGrid::truncated_line`] and [`DomainGrid::truncated_plane`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Intervals { intervals: Vec<[f64; 2]> },
    Circle { radius: f64 },
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Rectangle { x: [f64; 2], y: [f64; 2] },
    Discrete { points: Vec<[f64; 2]>, masses: Vec<f64> },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Intervals {
            intervals: vec![[a, b]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Domain::Intervals { intervals } => {
                if intervals.is_empty() {
                    return bad("empty interval list".into());
                }
                let mut sorted = intervals.clone();
                sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
                for iv in &sorted {
                    if !(iv[1] > iv[0]) || !iv[0].is_finite() || !iv[1].is_finite() {
                        return bad(format!("degenerate interval [{}, {}]", iv[0], iv[1]));
                    }
                }
                for w in sorted.windows(2) {
                    if w[1][0] <= w[0][1] {
                        return bad("intervals overlap or touch".into());
                    }
                }
                Ok(())
            }
            Domain::Circle { radius } | Domain::Disc { radius } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    bad(format!("radius must be positive, got {radius}"))
                }
            }
            Domain::Annulus { inner, outer } => {
                if *inner >= 0.0 && outer > inner && outer.is_finite() {
                    Ok(())
                } else {
                    bad(format!("invalid annulus {inner}..{outer}"))
                }
            }
            Domain::Rectangle { x, y } => {
                if x[1] > x[0] && y[1] > y[0] {
                    Ok(())
                } else {
                    bad("degenerate rectangle".into())
                }
            }
            Domain::Discrete { points, masses } => {
                if points.is_empty() || points.len() != masses.len() {
                    return bad("discrete domain needs matching points and masses".into());
                }
                if masses.iter().any(|m| *m < 0.0 || !m.is_finite()) {
                    return bad("negative discrete mass".into());
                }
                Ok(())
            }
        }
    }

    /// True when `Y` lies on the real axis.
    pub fn is_real(&self) -> bool {
        match self {
            Domain::Intervals { .. } => true,
            Domain::Discrete { points, .. } => points.iter().all(|p| p[1] == 0.0),
            _ => false,
        }
    }

    pub fn sorted_intervals(&self) -> Option<Vec<[f64; 2]>> {
        match self {
            Domain::Intervals { intervals } => {
                let mut v = intervals.clone();
                v.sort_by(|a, b| a[0].total_cmp(&b[0]));
                Some(v)
            }
            _ => None,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Domain::Intervals { intervals } => {
                z.im.abs() <= CONTAIN_EPS
                    && intervals
                        .iter()
                        .any(|iv| z.re >= iv[0] - CONTAIN_EPS && z.re <= iv[1] + CONTAIN_EPS)
            }
            Domain::Circle { radius } => (z.norm() - radius).abs() <= 1e-9 * radius.max(1.0),
            Domain::Disc { radius } => z.norm() <= radius + CONTAIN_EPS,
            Domain::Annulus { inner, outer } => {
                let r = z.norm();
                r >= inner - CONTAIN_EPS && r <= outer + CONTAIN_EPS
            }
            Domain::Rectangle { x, y } => {
                z.re >= x[0] - CONTAIN_EPS
                    && z.re <= x[1] + CONTAIN_EPS
                    && z.im >= y[0] - CONTAIN_EPS
                    && z.im <= y[1] + CONTAIN_EPS
            }
            Domain::Discrete { points, .. } => points
                .iter()
                .any(|p| (z - Complex64::new(p[0], p[1])).norm() <= CONTAIN_EPS),
        }
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            Domain::Intervals { intervals } => {
                let lo = intervals.iter().map(|i| i[0]).fold(f64::INFINITY, f64::min);
                let hi = intervals.iter().map(|i| i[1]).fold(f64::NEG_INFINITY, f64::max);
                [lo, hi, 0.0, 0.0]
            }
            Domain::Circle { radius } | Domain::Disc { radius } => {
                [-radius, *radius, -radius, *radius]
            }
            Domain::Annulus { outer, .. } => [-outer, *outer, -outer, *outer],
            Domain::Rectangle { x, y } => [x[0], x[1], y[0], y[1]],
            Domain::Discrete { points, .. } => {
                let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for p in points {
                    b[0] = b[0].min(p[0]);
                    b[1] = b[1].max(p[0]);
                    b[2] = b[2].min(p[1]);
                    b[3] = b[3].max(p[1]);
                }
                b
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let b = self.bounding_box();
        ((b[1] - b[0]).powi(2) + (b[3] - b[2]).powi(2)).sqrt()
    }

    /// Largest `|z|` over `Y`.
    pub fn max_modulus(&self) -> f64 {
        match self {
            Domain::Circle { radius } | Domain::Disc { radius } => *radius,
            Domain::Annulus { outer, .. } => *outer,
            _ => {
                let b = self.bounding_box();
                let x = b[0].abs().max(b[1].abs());
                let y = b[2].abs().max(b[3].abs());
                (x * x + y * y).sqrt()
            }
        }
    }

    /// Uniform draw with respect to the reference measure on `Y`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            Domain::Intervals { intervals } => {
                let total: f64 = intervals.iter().map(|i| i[1] - i[0]).sum();
                let mut u = rng.random::<f64>() * total;
                for iv in intervals {
                    let len = iv[1] - iv[0];
                    if u <= len {
                        return Complex64::new(iv[0] + u, 0.0);
                    }
                    u -= len;
                }
                let last = intervals[intervals.len() - 1];
                Complex64::new(last[1], 0.0)
            }
            Domain::Circle { radius } => {
                Complex64::from_polar(*radius, 2.0 * PI * rng.random::<f64>())
            }
            Domain::Discrete { points, masses } => {
                let total: f64 = masses.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (p, m) in points.iter().zip(masses) {
                    if u <= *m {
                        return Complex64::new(p[0], p[1]);
                    }
                    u -= m;
                }
                let p = points[points.len() - 1];
                Complex64::new(p[0], p[1])
            }
            _ => {
                let b = self.bounding_box();
                loop {
                    let z = Complex64::new(
                        b[0] + (b[1] - b[0]) * rng.random::<f64>(),
                        b[2] + (b[3] - b[2]) * rng.random::<f64>(),
                    );
                    if self.contains(z) {
                        return z;
                    }
                }
            }
        }
    }

    /// Topological dimension of `Y` (0 for atoms, 1 for curves and intervals).
    pub fn dimension(&self) -> usize {
        match self {
            Domain::Discrete { .. } => 0,
            Domain::Intervals { .. } | Domain::Circle { .. } => 1,
            _ => 2,
        }
    }
}

/// Query window `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Window {
    All,
    Intervals {
        intervals: Vec<[f64; 2]>,
    },
    Disc {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Annulus {
        #[serde(default)]
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
}

impl Window {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Window::All => true,
            Window::Intervals { intervals } => {
                z.im.abs() <= CONTAIN_EPS
                    && intervals.iter().any(|iv| z.re >= iv[0] && z.re <= iv[1])
            }
            Window::Disc { center, radius } => {
                (z - Complex64::new(center[0], center[1])).norm() <= *radius
            }
            Window::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = (z - Complex64::new(center[0], center[1])).norm();
                r >= *inner && r <= *outer
            }
        }
    }

    /// Bounding box, `None` for the whole space.
    pub fn bounding_box(&self) -> Option<[f64; 4]> {
        match self {
            Window::All => None,
            Window::Intervals { intervals } => {
                let lo = intervals.iter().map(|i| i[0]).fold(f64::INFINITY, f64::min);
                let hi = intervals.iter().map(|i| i[1]).fold(f64::NEG_INFINITY, f64::max);
                Some([lo, hi, 0.0, 0.0])
            }
            Window::Disc { center, radius } => Some([
                center[0] - radius,
                center[0] + radius,
                center[1] - radius,
                center[1] + radius,
            ]),
            Window::Annulus { center, outer, .. } => Some([
                center[0] - outer,
                center[0] + outer,
                center[1] - outer,
                center[1] + outer,
            ]),
        }
    }

    /// Breakpoints that quadrature panels should respect: interval endpoints on
    /// the real line, radii for windows centred at the origin.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Window::All => vec![],
            Window::Intervals { intervals } => intervals.iter().flat_map(|i| [i[0], i[1]]).collect(),
            Window::Disc { center, radius } if center == &[0.0, 0.0] => vec![*radius],
            Window::Annulus {
                center,
                inner,
                outer,
            } if center == &[0.0, 0.0] => vec![*inner, *outer],
            _ => vec![],
        }
    }

    /// Roughly `count` points of `W ∩ Y`.
    pub fn sample_points(&self, domain: &Domain, count: usize) -> Vec<Complex64> {
        let count = count.max(4);
        let mut pts = Vec::new();
        match self {
            Window::All => {
                if let Ok(g) = DomainGrid::cells(domain, count) {
                    pts = g.nodes;
                }
            }
            Window::Intervals { intervals } => {
                for iv in intervals {
                    for k in 0..count {
                        let x = iv[0] + (iv[1] - iv[0]) * k as f64 / (count - 1) as f64;
                        pts.push(Complex64::new(x, 0.0));
                    }
                }
            }
            Window::Disc { center, radius } => {
                let c = Complex64::new(center[0], center[1]);
                pts.push(c);
                let rings = (count as f64).sqrt().ceil() as usize;
                for i in 1..=rings {
                    let r = radius * i as f64 / rings as f64 * (1.0 - 1e-12);
                    for j in 0..rings * 4 {
                        pts.push(c + Complex64::from_polar(r, 2.0 * PI * j as f64 / (4 * rings) as f64));
                    }
                }
            }
            Window::Annulus {
                center,
                inner,
                outer,
            } => {
                let c = Complex64::new(center[0], center[1]);
                let rings = (count as f64).sqrt().ceil() as usize;
                for i in 0..=rings {
                    let r = (inner + (outer - inner) * i as f64 / rings as f64)
                        .clamp(inner * (1.0 + 1e-12), outer * (1.0 - 1e-12));
                    for j in 0..rings * 4 {
                        pts.push(c + Complex64::from_polar(r, 2.0 * PI * j as f64 / (4 * rings) as f64));
                    }
                }
            }
        }
        if let Domain::Circle { radius } = domain {
            // project onto the curve and keep the window's portion
            let m = count * 8;
            return (0..m)
                .map(|k| Complex64::from_polar(*radius, 2.0 * PI * k as f64 / m as f64))
                .filter(|z| self.contains(*z))
                .collect();
        }
        pts.retain(|z| domain.contains(*z) && self.contains(*z));
        pts
    }
}

/// Quadrature layout for [`DomainGrid::quadrature`].
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSpec {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panels per unit length (at least one panel per piece).
    pub panels_per_unit: f64,
    /// Angular points for polar rules and circles; 0 picks a default.
    pub angular: usize,
    /// Extra panel breakpoints (abscissae on the line, radii in polar rules).
    pub breaks: Vec<f64>,
}

impl RuleSpec {
    pub fn new(order: usize, panels_per_unit: f64) -> Self {
        RuleSpec {
            order,
            panels_per_unit,
            angular: 0,
            breaks: vec![],
        }
    }

    pub fn with_angular(mut self, angular: usize) -> Self {
        self.angular = angular;
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    /// Same layout with every panel's order doubled and twice the angular points.
    pub fn refined(&self) -> Self {
        RuleSpec {
            order: self.order * 2,
            panels_per_unit: self.panels_per_unit,
            angular: self.angular * 2,
            breaks: self.breaks.clone(),
        }
    }
}

/// Discretisation of `Y`: nodes, tau masses of their cells and the local
/// scales used for the self-interaction term of the log kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub domain: Domain,
    pub nodes: Vec<Complex64>,
    pub tau_mass: Vec<f64>,
    pub diag_desing: Vec<f64>,
    /// Typical node spacing.
    pub cell_size: f64,
    /// Density of tau relative to length/area measure on `Y`.
    #[serde(default = "one")]
    pub tau_density: f64,
    #[serde(default)]
    pub truncation_radius: Option<f64>,
    #[serde(default)]
    pub unbounded: bool,
}

fn one() -> f64 {
    1.0
}

/// Split `[a, b]` into roughly `per_unit * (b - a)` panels, respecting `breaks`.
fn panel_edges(a: f64, b: f64, per_unit: f64, breaks: &[f64]) -> Vec<f64> {
    let count = ((b - a) * per_unit).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..=count)
        .map(|k| a + (b - a) * k as f64 / count as f64)
        .collect();
    for &x in breaks {
        if x > a && x < b {
            edges.push(x);
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (b - a));
    edges
}

impl DomainGrid {
    /// Midpoint cells. `resolution` is the total node count for one-dimensional
    /// sets and the number of cells across the bounding box for planar sets.
    pub fn cells(domain: &Domain, resolution: usize) -> Result<Self> {
        domain.validate()?;
        if resolution < 1 {
            return Err(Error::InvalidInput("resolution must be positive".into()));
        }
        let mut nodes = Vec::new();
        let mut mass = Vec::new();
        let mut diag = Vec::new();
        let cell_size;
        match domain {
            Domain::Intervals { .. } => {
                let ivs = domain.sorted_intervals().unwrap_or_default();
                let total: f64 = ivs.iter().map(|i| i[1] - i[0]).sum();
                let mut hmax: f64 = 0.0;
                for iv in &ivs {
                    let len = iv[1] - iv[0];
                    let k = ((resolution as f64 * len / total).round() as usize).max(1);
                    let h = len / k as f64;
                    hmax = hmax.max(h);
                    for j in 0..k {
                        nodes.push(Complex64::new(iv[0] + (j as f64 + 0.5) * h, 0.0));
                        mass.push(h);
                        diag.push(h);
                    }
                }
                cell_size = hmax;
            }
            Domain::Circle { radius } => {
                let h = 2.0 * PI * radius / resolution as f64;
                for k in 0..resolution {
                    nodes.push(Complex64::from_polar(
                        *radius,
                        2.0 * PI * k as f64 / resolution as f64,
                    ));
                    mass.push(h);
                    diag.push(h);
                }
                cell_size = h;
            }
            Domain::Disc { .. } | Domain::Annulus { .. } | Domain::Rectangle { .. } => {
                let b = domain.bounding_box();
                let span = (b[1] - b[0]).max(b[3] - b[2]);
                let h = span / resolution as f64;
                let nx = ((b[1] - b[0]) / h).round().max(1.0) as usize;
                let ny = ((b[3] - b[2]) / h).round().max(1.0) as usize;
                let hx = (b[1] - b[0]) / nx as f64;
                let hy = (b[3] - b[2]) / ny as f64;
                for j in 0..ny {
                    for i in 0..nx {
                        let z = Complex64::new(
                            b[0] + (i as f64 + 0.5) * hx,
                            b[2] + (j as f64 + 0.5) * hy,
                        );
                        if domain.contains(z) {
                            nodes.push(z);
                            mass.push(hx * hy);
                            diag.push((hx * hy).sqrt());
                        }
                    }
                }
                cell_size = hx.max(hy);
            }
            Domain::Discrete { points, masses } => {
                return Self::discrete(points, masses);
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidInput("grid has no nodes inside the domain".into()));
        }
        Ok(DomainGrid {
            domain: domain.clone(),
            nodes,
            tau_mass: mass,
            diag_desing: diag,
            cell_size,
            tau_density: 1.0,
            truncation_radius: None,
            unbounded: false,
        })
    }

    fn discrete(points: &[[f64; 2]], masses: &[f64]) -> Result<Self> {
        let nodes: Vec<Complex64> = points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let mut diag = vec![1.0; nodes.len()];
        for i in 0..nodes.len() {
            let d = nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, z)| (z - nodes[i]).norm())
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() && d > 0.0 {
                diag[i] = d;
            }
        }
        let cell_size = diag.iter().copied().fold(0.0, f64::max);
        Ok(DomainGrid {
            domain: Domain::Discrete {
                points: points.to_vec(),
                masses: masses.to_vec(),
            },
            nodes,
            tau_mass: masses.to_vec(),
            diag_desing: diag,
            cell_size,
            tau_density: 1.0,
            truncation_radius: None,
            unbounded: false,
        })
    }

    /// Quadrature nodes: Gauss–Legendre panels on the line, polar
    /// Gauss–Legendre × trapezoid on discs and annuli, trapezoid on circles,
    /// tensor Gauss–Legendre on rectangles.
    pub fn quadrature(domain: &Domain, spec: &RuleSpec) -> Result<Self> {
        domain.validate()?;
        if spec.order == 0 {
            return Err(Error::InvalidInput("quadrature order must be positive".into()));
        }
        let mut nodes = Vec::new();
        let mut mass = Vec::new();
        let mut diag = Vec::new();
        let mut cell: f64 = 0.0;
        match domain {
            Domain::Intervals { .. } => {
                for iv in domain.sorted_intervals().unwrap_or_default() {
                    let edges = panel_edges(iv[0], iv[1], spec.panels_per_unit, &spec.breaks);
                    for w in edges.windows(2) {
                        cell = cell.max((w[1] - w[0]) / spec.order as f64);
                        for (x, wt) in gauss_legendre_on(w[0], w[1], spec.order) {
                            nodes.push(Complex64::new(x, 0.0));
                            mass.push(wt);
                            diag.push(wt);
                        }
                    }
                }
            }
            Domain::Circle { radius } => {
                let m = if spec.angular > 0 {
                    spec.angular
                } else {
                    ((2.0 * PI * radius * spec.panels_per_unit).ceil() as usize * spec.order).max(8)
                };
                let h = 2.0 * PI * radius / m as f64;
                for k in 0..m {
                    nodes.push(Complex64::from_polar(*radius, 2.0 * PI * k as f64 / m as f64));
                    mass.push(h);
                    diag.push(h);
                }
                cell = h;
            }
            Domain::Disc { .. } | Domain::Annulus { .. } => {
                let (r0, r1) = match domain {
                    Domain::Disc { radius } => (0.0, *radius),
                    Domain::Annulus { inner, outer } => (*inner, *outer),
                    _ => unreachable!(),
                };
                let m = if spec.angular > 0 {
                    spec.angular
                } else {
                    ((2.0 * PI * r1 * spec.panels_per_unit).ceil() as usize * spec.order).max(8)
                };
                let edges = panel_edges(r0, r1, spec.panels_per_unit, &spec.breaks);
                let dtheta = 2.0 * PI / m as f64;
                for w in edges.windows(2) {
                    for (r, wr) in gauss_legendre_on(w[0], w[1], spec.order) {
                        for k in 0..m {
                            let theta = (k as f64 + 0.5) * dtheta;
                            let wt = wr * r * dtheta;
                            nodes.push(Complex64::from_polar(r, theta));
                            mass.push(wt);
                            diag.push(wt.sqrt());
                        }
                    }
                    cell = cell.max((w[1] - w[0]) / spec.order as f64);
                }
                cell = cell.max(r1 * dtheta);
            }
            Domain::Rectangle { x, y } => {
                let ex = panel_edges(x[0], x[1], spec.panels_per_unit, &spec.breaks);
                let ey = panel_edges(y[0], y[1], spec.panels_per_unit, &[]);
                let gx: Vec<(f64, f64)> = ex
                    .windows(2)
                    .flat_map(|w| gauss_legendre_on(w[0], w[1], spec.order))
                    .collect();
                let gy: Vec<(f64, f64)> = ey
                    .windows(2)
                    .flat_map(|w| gauss_legendre_on(w[0], w[1], spec.order))
                    .collect();
                for &(yy, wy) in &gy {
                    for &(xx, wx) in &gx {
                        nodes.push(Complex64::new(xx, yy));
                        mass.push(wx * wy);
                        diag.push((wx * wy).sqrt());
                    }
                }
                for w in ex.windows(2).chain(ey.windows(2)) {
                    cell = cell.max((w[1] - w[0]) / spec.order as f64);
                }
            }
            Domain::Discrete { points, masses } => return Self::discrete(points, masses),
        }
        Ok(DomainGrid {
            domain: domain.clone(),
            nodes,
            tau_mass: mass,
            diag_desing: diag,
            cell_size: cell,
            tau_density: 1.0,
            truncation_radius: None,
            unbounded: false,
        })
    }

    /// `[-r, r]` standing in for the real line, with `r` from [`truncation_radius`].
    pub fn truncated_line(
        field: &crate::field::FieldSpec,
        b: f64,
        resolution: usize,
    ) -> Result<Self> {
        let r = truncation_radius(field, b, true)?;
        let mut g = Self::cells(&Domain::interval(-r, r), resolution)?;
        g.truncation_radius = Some(r);
        g.unbounded = true;
        Ok(g)
    }

    /// Disc of radius `r` standing in for the plane.
    pub fn truncated_plane(
        field: &crate::field::FieldSpec,
        b: f64,
        resolution: usize,
    ) -> Result<Self> {
        let r = truncation_radius(field, b, false)?;
        let mut g = Self::cells(&Domain::Disc { radius: r }, resolution)?;
        g.truncation_radius = Some(r);
        g.unbounded = true;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Multiply tau by `c > 0`.
    pub fn with_tau_scale(mut self, c: f64) -> Self {
        for m in &mut self.tau_mass {
            *m *= c;
        }
        self.tau_density *= c;
        if let Domain::Discrete { masses, .. } = &mut self.domain {
            for m in masses {
                *m *= c;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.tau_mass.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.tau_mass.len(),
            });
        }
        if self.diag_desing.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.diag_desing.len(),
            });
        }
        if self.tau_mass.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidInput("negative tau mass".into()));
        }
        if !self.tau_mass.iter().any(|m| *m > 0.0) {
            return Err(Error::ZeroMass);
        }
        if self.diag_desing.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidInput("desingularisation scale must be positive".into()));
        }
        Ok(())
    }

    /// Indices of nodes within `dist` of any node in `seed` (including `seed`).
    pub fn dilate(&self, seed: &[usize], dist: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, z) in self.nodes.iter().enumerate() {
            if seed.iter().any(|&j| (self.nodes[j] - z).norm() <= dist + 1e-12) {
                out.push(i);
            }
        }
        out
    }
}

/// Smallest `r >= max(1, r0)` with `R(r) - (1+b) log r >= R(r0) + 10`, where
/// `r0` minimises `R` along rays. Real fields use both half-lines.
pub fn truncation_radius(field: &crate::field::FieldSpec, b: f64, real: bool) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidInput(format!("growth margin b must be positive, got {b}")));
    }
    let r_along = |r: f64| ray_minimum(field, r, real);
    let mut r0 = 0.0;
    let mut rmin = r_along(0.0);
    let mut r = 1e-3;
    while r < 1e6 {
        let v = r_along(r);
        if v < rmin {
            rmin = v;
            r0 = r;
        }
        r *= 1.05;
    }
    let target = rmin + 10.0;
    let excess = |r: f64| r_along(r) - (1.0 + b) * r.ln() - target;
    let mut lo: f64 = r0.max(1.0);
    if excess(lo) >= 0.0 {
        return Ok(lo);
    }
    let mut hi = lo * 2.0;
    while excess(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::HypothesisViolation {
                id: "superlogarithmic-growth",
                detail: "no truncation radius below 1e8".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Minimum of `R` over the circle `|z| = r` (or `{r, -r}` for real fields).
pub fn ray_minimum(field: &crate::field::FieldSpec, r: f64, real: bool) -> f64 {
    if real {
        return field
            .r(Complex64::new(r, 0.0))
            .min(field.r(Complex64::new(-r, 0.0)));
    }
    if let Some((v, _)) = field.radial_r(r) {
        return v;
    }
    (0..64)
        .map(|k| field.r(Complex64::from_polar(r, 2.0 * PI * k as f64 / 64.0)))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldSpec, Potential};

    #[test]
    fn interval_cells_cover_length() {
        let g = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 600).unwrap();
        assert_eq!(g.len(), 600);
        let total: f64 = g.tau_mass.iter().sum();
        assert!((total - 6.0).abs() < 1e-12);
        assert!((g.cell_size - 0.01).abs() < 1e-12);
        g.validate().unwrap();
    }

    #[test]
    fn disc_cells_approximate_area() {
        let g = DomainGrid::cells(&Domain::Disc { radius: 2.0 }, 60).unwrap();
        let area: f64 = g.tau_mass.iter().sum();
        assert!((area - 4.0 * PI).abs() / (4.0 * PI) < 0.02);
        assert!(g.nodes.iter().all(|z| z.norm() <= 2.0));
    }

    #[test]
    fn polar_rule_integrates_radial_moments() {
        let spec = RuleSpec::new(8, 2.0).with_angular(32).with_breaks(vec![0.95, 1.05]);
        let g = DomainGrid::quadrature(&Domain::Disc { radius: 2.0 }, &spec).unwrap();
        let area: f64 = g.tau_mass.iter().sum();
        assert!((area - 4.0 * PI).abs() < 1e-10);
        let m2: f64 = g.nodes.iter().zip(&g.tau_mass).map(|(z, w)| w * z.norm_sqr()).sum();
        assert!((m2 - PI * 16.0 / 2.0).abs() < 1e-10);
        let zsq: f64 = g.nodes.iter().zip(&g.tau_mass).map(|(z, w)| w * (z * z).re).sum();
        assert!(zsq.abs() < 1e-10);
    }

    #[test]
    fn quadrature_respects_breaks() {
        let spec = RuleSpec::new(4, 1.0).with_breaks(vec![2.2]);
        let g = DomainGrid::quadrature(&Domain::interval(-3.0, 3.0), &spec).unwrap();
        let right: f64 = g
            .nodes
            .iter()
            .zip(&g.tau_mass)
            .filter(|(z, _)| z.re > 2.2)
            .map(|(_, w)| w)
            .sum();
        assert!((right - 0.8).abs() < 1e-13);
    }

    #[test]
    fn window_membership() {
        let w = Window::Annulus {
            center: [0.0, 0.0],
            inner: 0.95,
            outer: 1.05,
        };
        assert!(w.contains(Complex64::new(0.0, 1.0)));
        assert!(!w.contains(Complex64::new(0.5, 0.0)));
        assert_eq!(w.breakpoints(), vec![0.95, 1.05]);
        let pts = w.sample_points(&Domain::Disc { radius: 2.0 }, 100);
        assert!(pts.len() > 50 && pts.iter().all(|z| w.contains(*z)));
    }

    #[test]
    fn truncation_rule_for_quadratic() {
        let f = FieldSpec::from_weight_exponent(
            2.0,
            Potential::RealPolynomial {
                coeffs: vec![0.0, 0.0, 0.5],
            },
        )
        .unwrap();
        let r = truncation_radius(&f, 1.0, true).unwrap();
        let excess = r * r / 2.0 - 2.0 * r.ln();
        assert!((excess - 10.0).abs() < 1e-6, "r={r} excess={excess}");
        let g = DomainGrid::truncated_line(&f, 1.0, 200).unwrap();
        assert!(g.unbounded);
        assert_eq!(g.truncation_radius, Some(r));
    }

    #[test]
    fn tau_scaling() {
        let g = DomainGrid::cells(&Domain::interval(0.0, 1.0), 10).unwrap();
        let s = g.clone().with_tau_scale(3.0);
        assert_eq!(s.tau_density, 3.0);
        for (a, b) in g.tau_mass.iter().zip(&s.tau_mass) {
            assert!((3.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn validation_catches_bad_grids() {
        let mut g = DomainGrid::cells(&Domain::interval(0.0, 1.0), 4).unwrap();
        g.tau_mass = vec![0.0; 4];
        assert!(matches!(g.validate(), Err(Error::ZeroMass)));
        assert!(Domain::Intervals {
            intervals: vec![[0.0, 2.0], [1.0, 3.0]]
        }
        .validate()
        .is_err());
    }
}

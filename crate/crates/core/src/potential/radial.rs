use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{ray_minimum, DomainGrid};
use crate::error::{Error, Result};
use crate::field::FieldSpec;

const LOG_GRID_LO: f64 = 1e-6;
const LOG_GRID_HI: f64 = 1e6;
const LOG_GRID_POINTS: usize = 241;

/// Support radius `T0` of a radial field, solving `T0 R'(T0) = 1`.
pub fn radial_support_radius(field: &FieldSpec) -> Result<f64> {
    let g = |t: f64| -> Result<f64> {
        field
            .radial_r(t)
            .map(|(_, d)| t * d)
            .ok_or_else(|| Error::RadialHypotheses("field is not radial".into()))
    };
    let step = (LOG_GRID_HI / LOG_GRID_LO).ln() / (LOG_GRID_POINTS - 1) as f64;
    let ts: Vec<f64> = (0..LOG_GRID_POINTS)
        .map(|k| LOG_GRID_LO * (step * k as f64).exp())
        .collect();
    let vals = ts.iter().map(|&t| g(t)).collect::<Result<Vec<f64>>>()?;
    for (k, w) in vals.windows(2).enumerate() {
        if !(w[1] > w[0] - 1e-12 * w[0].abs()) {
            return Err(Error::RadialHypotheses(format!(
                "t R'(t) is not increasing near t = {:.3e}",
                ts[k + 1]
            )));
        }
    }
    let Some(k) = vals.windows(2).position(|w| w[0] <= 1.0 && w[1] >= 1.0) else {
        return Err(Error::NoRadialRoot {
            lo: LOG_GRID_LO,
            hi: LOG_GRID_HI,
        });
    };
    let (mut lo, mut hi) = (ts[k], ts[k + 1]);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form Robin constant `R(T0) - log T0` of a radial field.
pub fn radial_robin_constant(field: &FieldSpec) -> Result<f64> {
    let t0 = radial_support_radius(field)?;
    let (r, _) = field
        .radial_r(t0)
        .ok_or_else(|| Error::RadialHypotheses("field is not radial".into()))?;
    Ok(r - t0.ln())
}

/// Closed-form Green function: `R(|z|)` on the support disc and
/// `log|z| + R(T0) - log T0` outside it.
pub fn radial_green_function(field: &FieldSpec, z: Complex64) -> Result<f64> {
    let t0 = radial_support_radius(field)?;
    let t = z.norm();
    let (rt, _) = field
        .radial_r(t.min(t0))
        .ok_or_else(|| Error::RadialHypotheses("field is not radial".into()))?;
    if t <= t0 {
        Ok(rt)
    } else {
        Ok(t.ln() + rt - t0.ln())
    }
}

/// Closed-form rate function `beta (R - V)`.
pub fn radial_rate_function(field: &FieldSpec, z: Complex64) -> Result<f64> {
    let v = radial_green_function(field, z)?;
    Ok((field.beta * (field.r(z) - v)).max(0.0))
}

/// Default lower bound required of `R - (1+b) log|z|` at the truncation radius.
pub const SUPERLOG_MARGIN: f64 = 1.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperlogReport {
    pub b: f64,
    pub radii: [f64; 3],
    /// `min over directions of R(z) - (1+b) log|z|` at each radius.
    pub values: [f64; 3],
    pub margin: f64,
    pub pass: bool,
    pub detail: String,
}

/// Growth check at the truncation radius and at twice and four times it.
pub fn validate_superlogarithmic(field: &FieldSpec, grid: &DomainGrid) -> SuperlogReport {
    validate_superlogarithmic_with(field, grid, SUPERLOG_MARGIN)
}

pub fn validate_superlogarithmic_with(field: &FieldSpec, grid: &DomainGrid, margin: f64) -> SuperlogReport {
    let b = field.superlog_b.unwrap_or(f64::NAN);
    let rt = grid.truncation_radius.unwrap_or_else(|| grid.domain.max_modulus());
    let radii = [rt, 2.0 * rt, 4.0 * rt];
    let real = grid.domain.is_real();
    let values = radii.map(|r| ray_minimum(field, r, real) - (1.0 + b) * r.ln());
    let fail = |why: &str| SuperlogReport {
        b,
        radii,
        values,
        margin,
        pass: false,
        detail: why.to_string(),
    };
    if !grid.unbounded {
        return fail("grid is not flagged unbounded");
    }
    if !(b > 0.0) {
        return fail("growth margin b missing or nonpositive");
    }
    if !(values[0] < values[1] && values[1] < values[2]) {
        return fail("R - (1+b) log|z| is not increasing");
    }
    if !(values[0] > margin) {
        return fail("R - (1+b) log|z| below margin at the truncation radius");
    }
    SuperlogReport {
        b,
        radii,
        values,
        margin,
        pass: true,
        detail: "increasing and above margin".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::field::Potential;

    fn radial(coeffs: Vec<f64>) -> FieldSpec {
        FieldSpec::from_weight_exponent(2.0, Potential::RadialPolynomial { coeffs }).unwrap()
    }

    #[test]
    fn support_radius_closed_forms() {
        let t = radial_support_radius(&radial(vec![0.0, 0.0, 1.0])).unwrap();
        assert!((t - 0.5f64.sqrt()).abs() < 1e-9);
        let t = radial_support_radius(&radial(vec![0.0, 0.0, 0.5])).unwrap();
        assert!((t - 1.0).abs() < 1e-9);
        let rho = radial_robin_constant(&radial(vec![0.0, 0.0, 1.0])).unwrap();
        assert!((rho - (0.5 + 0.5 * 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn support_radius_without_root() {
        let f = FieldSpec::from_weight_exponent(2.0, Potential::RadialLog { scale: 1.0, power: 1.0 }).unwrap();
        assert!(matches!(radial_support_radius(&f), Err(Error::NoRadialRoot { .. })));
        let nonmono = radial(vec![0.0, 0.0, 1.0, -0.1]);
        assert!(matches!(radial_support_radius(&nonmono), Err(Error::RadialHypotheses(_))));
    }

    #[test]
    fn radial_rate_at_unit_circle() {
        let j = radial_rate_function(&radial(vec![0.0, 0.0, 1.0]), Complex64::new(1.0, 0.0)).unwrap();
        assert!((j - 2.0 * (1.0 - 0.5 - 0.5 * 2f64.ln())).abs() < 1e-9);
    }

    fn plane(radius: f64) -> DomainGrid {
        let mut g = DomainGrid::cells(&Domain::Disc { radius }, 8).unwrap();
        g.unbounded = true;
        g.truncation_radius = Some(radius);
        g
    }

    #[test]
    fn superlog_verdicts() {
        let quad = radial(vec![0.0, 0.0, 1.0]).with_superlog_b(1.0);
        let grid = DomainGrid::truncated_plane(&quad, 1.0, 8).unwrap();
        assert!(validate_superlogarithmic(&quad, &grid).pass);

        let weak = FieldSpec::from_weight_exponent(2.0, Potential::RadialLog { scale: 0.5, power: 2.0 })
            .unwrap()
            .with_superlog_b(1.0);
        assert!(!validate_superlogarithmic(&weak, &plane(10.0)).pass);

        let borderline = FieldSpec::from_weight_exponent(2.0, Potential::RadialLog { scale: 1.5, power: 1.0 })
            .unwrap()
            .with_superlog_b(0.5);
        assert!(!validate_superlogarithmic(&borderline, &plane(10.0)).pass);
    }
}

//! Confining potentials and the derived weight exponent `R = 2Q/beta`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functional form of a potential on `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `sum_k c_k x^k` with `x = Re z`.
    RealPolynomial { coeffs: Vec<f64> },
    /// `sum_k c_k |z|^k`.
    RadialPolynomial { coeffs: Vec<f64> },
    /// `scale * log(1 + |z|^power)`.
    RadialLog { scale: f64, power: f64 },
    /// Values tabulated at points. Off-node evaluation interpolates linearly
    /// when every point is real, otherwise takes the nearest point.
    Tabulated { points: Vec<[f64; 2]>, values: Vec<f64> },
}

impl Potential {
    pub fn zero() -> Self {
        Potential::RadialPolynomial { coeffs: vec![0.0] }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            Potential::RealPolynomial { coeffs } => horner(coeffs, z.re),
            Potential::RadialPolynomial { coeffs } => horner(coeffs, z.norm()),
            Potential::RadialLog { scale, power } => scale * z.norm().powf(*power).ln_1p(),
            Potential::Tabulated { points, values } => eval_tabulated(points, values, z),
        }
    }

    /// Multiply the potential by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Potential::RealPolynomial { coeffs } => Potential::RealPolynomial {
                coeffs: coeffs.iter().map(|a| a * c).collect(),
            },
            Potential::RadialPolynomial { coeffs } => Potential::RadialPolynomial {
                coeffs: coeffs.iter().map(|a| a * c).collect(),
            },
            Potential::RadialLog { scale, power } => Potential::RadialLog {
                scale: scale * c,
                power: *power,
            },
            Potential::Tabulated { points, values } => Potential::Tabulated {
                points: points.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(
            self,
            Potential::RadialPolynomial { .. } | Potential::RadialLog { .. }
        )
    }

    /// Radial profile and its derivative at `t >= 0`; `None` for non-radial forms.
    pub fn radial_profile(&self, t: f64) -> Option<(f64, f64)> {
        match self {
            Potential::RadialPolynomial { coeffs } => {
                let value = horner(coeffs, t);
                let deriv = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c);
                Some((value, deriv))
            }
            Potential::RadialLog { scale, power } => {
                let tp = t.powf(*power);
                let deriv = if t > 0.0 {
                    scale * power * tp / (t * (1.0 + tp))
                } else {
                    0.0
                };
                Some((scale * tp.ln_1p(), deriv))
            }
            _ => None,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn eval_tabulated(points: &[[f64; 2]], values: &[f64], z: Complex64) -> f64 {
    if points.is_empty() {
        return f64::NAN;
    }
    let real_line = points.iter().all(|p| p[1] == 0.0);
    if real_line && z.im.abs() <= 1e-12 {
        // points are not assumed sorted
        let mut below: Option<(f64, f64)> = None;
        let mut above: Option<(f64, f64)> = None;
        for (p, &v) in points.iter().zip(values) {
            let x = p[0];
            if x == z.re {
                return v;
            }
            if x < z.re && below.is_none_or(|(bx, _)| x > bx) {
                below = Some((x, v));
            }
            if x > z.re && above.is_none_or(|(ax, _)| x < ax) {
                above = Some((x, v));
            }
        }
        return match (below, above) {
            (Some((x0, v0)), Some((x1, v1))) => v0 + (v1 - v0) * (z.re - x0) / (x1 - x0),
            (Some((_, v)), None) | (None, Some((_, v))) => v,
            (None, None) => f64::NAN,
        };
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for (p, &v) in points.iter().zip(values) {
        let d = (z - Complex64::new(p[0], p[1])).norm_sqr();
        if d < best.0 {
            best = (d, v);
        }
    }
    best.1
}

/// Confining potential `Q` together with the inverse temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub beta: f64,
    /// The potential `Q`.
    pub q: Potential,
    /// Growth margin `b` used for unbounded domains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superlog_b: Option<f64>,
}

impl FieldSpec {
    pub fn new(beta: f64, q: Potential) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        Ok(FieldSpec {
            beta,
            q,
            superlog_b: None,
        })
    }

    /// Build from the weight exponent `R`; stores `Q = beta * R / 2`.
    pub fn from_weight_exponent(beta: f64, r: Potential) -> Result<Self> {
        let q = r.scaled(beta / 2.0);
        Self::new(beta, q)
    }

    pub fn with_superlog_b(mut self, b: f64) -> Self {
        self.superlog_b = Some(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if let Potential::Tabulated { points, values } = &self.q {
            if points.len() != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: values.len(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn q(&self, z: Complex64) -> f64 {
        self.q.eval(z)
    }

    /// Weight exponent `R(z) = 2 Q(z) / beta`.
    #[inline]
    pub fn r(&self, z: Complex64) -> f64 {
        2.0 * self.q.eval(z) / self.beta
    }

    /// The weight exponent as a potential in its own right.
    pub fn weight_exponent(&self) -> Potential {
        self.q.scaled(2.0 / self.beta)
    }

    /// Same `Q`, different `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut f = Self::new(beta, self.q.clone())?;
        f.superlog_b = self.superlog_b;
        Ok(f)
    }

    /// Potential multiplied by `c` (used for the `nQ/(n-1)` ensembles).
    pub fn scaled(&self, c: f64) -> Self {
        FieldSpec {
            beta: self.beta,
            q: self.q.scaled(c),
            superlog_b: self.superlog_b,
        }
    }

    /// `R` on a radial profile together with `R'`.
    pub fn radial_r(&self, t: f64) -> Option<(f64, f64)> {
        self.q
            .radial_profile(t)
            .map(|(v, d)| (2.0 * v / self.beta, 2.0 * d / self.beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_exponent_roundtrip() {
        let f = FieldSpec::from_weight_exponent(
            2.0,
            Potential::RadialPolynomial {
                coeffs: vec![0.0, 0.0, 1.0],
            },
        )
        .unwrap();
        let z = Complex64::new(0.3, -0.4);
        assert!((f.r(z) - 0.25).abs() < 1e-15);
        assert!((f.q(z) - 0.25).abs() < 1e-15);
        let f4 = f.with_beta(4.0).unwrap();
        assert!((f4.r(z) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(FieldSpec::new(0.0, Potential::zero()).is_err());
        assert!(FieldSpec::new(-1.0, Potential::zero()).is_err());
    }

    #[test]
    fn radial_derivatives() {
        let p = Potential::RadialPolynomial {
            coeffs: vec![1.0, 0.0, 3.0],
        };
        let (v, d) = p.radial_profile(2.0).unwrap();
        assert_eq!(v, 13.0);
        assert_eq!(d, 12.0);
        let l = Potential::RadialLog {
            scale: 1.0,
            power: 1.0,
        };
        let (v, d) = l.radial_profile(1.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolation() {
        let t = Potential::Tabulated {
            points: vec![[1.0, 0.0], [0.0, 0.0], [2.0, 0.0]],
            values: vec![1.0, 0.0, 4.0],
        };
        assert_eq!(t.eval(Complex64::new(0.5, 0.0)), 0.5);
        assert_eq!(t.eval(Complex64::new(1.5, 0.0)), 2.5);
        assert_eq!(t.eval(Complex64::new(2.0, 0.0)), 4.0);
        assert_eq!(t.eval(Complex64::new(3.0, 0.0)), 4.0);
        let planar = Potential::Tabulated {
            points: vec![[0.0, 0.0], [0.0, 1.0]],
            values: vec![1.0, 2.0],
        };
        assert_eq!(planar.eval(Complex64::new(0.1, 0.8)), 2.0);
    }

    #[test]
    fn json_roundtrip() {
        let f = FieldSpec::new(
            1.5,
            Potential::RealPolynomial {
                coeffs: vec![0.0, 0.0, 0.5],
            },
        )
        .unwrap()
        .with_superlog_b(1.0);
        let s = serde_json::to_string(&f).unwrap();
        let back: FieldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
        assert!(serde_json::from_str::<FieldSpec>(r#"{"beta":1,"q":{"kind":"radial_polynomial","coeffs":[0]},"extra":1}"#).is_err());
    }
}

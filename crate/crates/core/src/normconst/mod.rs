//! Partition functions: exact values for `n <= 3`, the ratio `h_n` from
//! chains, and telescoped `log Z_n` for the energy scaling limit.

mod ratio;
mod small_n;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ratio::{ratio_estimate_h_n, RatioEstimate, RHAT_THRESHOLD};
pub use small_n::{exact_partition_small_n, small_n_quadrature, SmallNQuadrature, MAX_EXACT_N};

use crate::error::{Error, Result};
use crate::field::FieldSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethod {
    Quadrature,
    RatioChain,
}

/// `log Z_{n,beta,Q}` with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub n: usize,
    pub beta: f64,
    #[serde(skip)]
    pub field_tag: String,
    pub method: PartitionMethod,
    pub log_value: f64,
    pub error: f64,
}

/// Compact identifier of the potential.
pub fn field_tag(field: &FieldSpec) -> String {
    serde_json::to_string(&field.q).unwrap_or_default()
}

/// CSV with columns `n, beta, method, log_value, error`.
pub fn write_partition_csv(path: &Path, records: &[PartitionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_partition_csv(path: &Path) -> Result<Vec<PartitionRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

/// `log Z_m` for `m = anchor.n + 1, ...` by adding the ratio increments,
/// which must cover consecutive `n`. Errors add in quadrature.
pub fn telescope(anchor: &PartitionRecord, steps: &[RatioEstimate]) -> Result<Vec<PartitionRecord>> {
    let mut out = vec![anchor.clone()];
    let mut value = anchor.log_value;
    let mut var = anchor.error * anchor.error;
    for (i, s) in steps.iter().enumerate() {
        let expected = anchor.n + i + 1;
        if s.n != expected {
            return Err(Error::MissingAnchor(format!(
                "ratio chain for n = {expected} missing (found n = {})",
                s.n
            )));
        }
        value += s.increment;
        var += s.increment_se.powi(2);
        out.push(PartitionRecord {
            n: s.n,
            beta: anchor.beta,
            field_tag: anchor.field_tag.clone(),
            method: PartitionMethod::RatioChain,
            log_value: value,
            error: var.sqrt(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyScalingReport {
    /// `(n, (1/n^2) log Z_n, error / n^2)`.
    pub sequence: Vec<(usize, f64, f64)>,
    /// `-(beta/2) E(mu)`.
    pub target: f64,
    pub final_gap: f64,
    /// `final_gap / |target|`, infinite when the target is zero.
    pub final_relative_gap: f64,
}

/// `(1/n^2) log Z_n` against `-(beta/2) E(mu)`. The records must include a
/// quadrature anchor.
pub fn energy_scaling_check(records: &[PartitionRecord], energy: f64) -> Result<EnergyScalingReport> {
    if !records.iter().any(|r| r.method == PartitionMethod::Quadrature) {
        return Err(Error::MissingAnchor("no quadrature record among the partition values".into()));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.n);
    let beta = sorted[0].beta;
    let target = -0.5 * beta * energy;
    let sequence: Vec<(usize, f64, f64)> = sorted
        .iter()
        .map(|r| {
            let n2 = (r.n * r.n) as f64;
            (r.n, r.log_value / n2, r.error / n2)
        })
        .collect();
    let last = sequence.last().expect("non-empty").1;
    let final_gap = (last - target).abs();
    let final_relative_gap = if target != 0.0 {
        final_gap / target.abs()
    } else {
        f64::INFINITY
    };
    Ok(EnergyScalingReport {
        sequence,
        target,
        final_gap,
        final_relative_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, v: f64, method: PartitionMethod) -> PartitionRecord {
        PartitionRecord {
            n,
            beta: 2.0,
            field_tag: String::new(),
            method,
            log_value: v,
            error: 0.1,
        }
    }

    fn step(n: usize, inc: f64) -> RatioEstimate {
        RatioEstimate {
            n,
            log_h: inc,
            log_h_se: 0.1,
            log_shift: 0.0,
            increment: inc,
            increment_se: 0.1,
            rhat: 1.0,
            equilibrated: true,
            samples: 10,
        }
    }

    #[test]
    fn telescoping_adds_increments() {
        let a = rec(2, 1.0, PartitionMethod::Quadrature);
        let t = telescope(&a, &[step(3, 0.5), step(4, -2.0)]).unwrap();
        assert_eq!(t.len(), 3);
        assert!((t[2].log_value + 0.5).abs() < 1e-15);
        assert!((t[2].error - 0.03f64.sqrt()).abs() < 1e-12);
        assert!(matches!(telescope(&a, &[step(4, 0.0)]), Err(Error::MissingAnchor(_))));
    }

    #[test]
    fn scaling_needs_anchor() {
        let r = [rec(5, 1.0, PartitionMethod::RatioChain)];
        assert!(matches!(energy_scaling_check(&r, 0.0), Err(Error::MissingAnchor(_))));
        let r = [rec(2, 0.0, PartitionMethod::Quadrature), rec(4, 1.6, PartitionMethod::RatioChain)];
        let rep = energy_scaling_check(&r, -0.2).unwrap();
        assert!((rep.sequence[1].1 - 0.1).abs() < 1e-15);
        assert!((rep.target - 0.2).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.csv");
        let r = vec![rec(2, -0.25, PartitionMethod::Quadrature), rec(3, 1.5, PartitionMethod::RatioChain)];
        write_partition_csv(&p, &r).unwrap();
        let header = std::fs::read_to_string(&p).unwrap();
        assert!(header.starts_with("n,beta,method,log_value,error"));
        assert_eq!(read_partition_csv(&p).unwrap(), r);
    }
}

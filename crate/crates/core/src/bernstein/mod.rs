//! Weighted orthonormal polynomials and Bernstein–Markov diagnostics.

mod basis;
mod checks;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use basis::{bm_constant, kernel_sup_ratio, WeightedBasis};
pub use checks::{
    log_weighted_values, monic_lower_bound_check, monic_margin, monic_slack, random_polynomial, sup_ratio,
    sup_restriction_check, tail_integrability, tail_mass_check, tail_neighbourhood, tail_ratio, MonicReport,
    SupRestrictionReport, TailIntegrability, TailReport,
};

use crate::domain::DomainGrid;
use crate::error::Result;
use crate::field::FieldSpec;

/// Final `M_n^{1/n}` allowed by the Bernstein–Markov verdict.
pub const BM_ROOT_BAND: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmRow {
    pub n: usize,
    pub m_n: f64,
    pub m_n_root: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BmReport {
    pub rows: Vec<BmRow>,
    pub decreasing: bool,
    pub final_root: f64,
    pub pass: bool,
}

/// `M_n` and `M_n^{1/n}` over `ns`; passes when the roots decrease and the
/// last is at most [`BM_ROOT_BAND`].
pub fn bm_sequence(grid: &DomainGrid, field: &FieldSpec, ns: &[usize]) -> Result<BmReport> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let basis = WeightedBasis::build(grid, field, n)?;
        let (m, _) = bm_constant(&basis);
        let root = if n == 0 { m } else { m.powf(1.0 / n as f64) };
        rows.push(BmRow { n, m_n: m, m_n_root: root });
    }
    let decreasing = rows.windows(2).all(|w| w[1].m_n_root < w[0].m_n_root);
    let final_root = rows.last().map_or(f64::NAN, |r| r.m_n_root);
    Ok(BmReport {
        pass: decreasing && final_root <= BM_ROOT_BAND,
        rows,
        decreasing,
        final_root,
    })
}

/// CSV with columns `n, M_n, M_n_root`.
pub fn write_bm_csv(path: &Path, rows: &[BmRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "M_n", "M_n_root"])?;
    for r in rows {
        w.write_record([r.n.to_string(), r.m_n.to_string(), r.m_n_root.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `n, ratio_out, fit_slope`.
pub fn write_tail_csv(path: &Path, report: &TailReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "ratio_out", "fit_slope"])?;
    for (n, r) in report.ns.iter().zip(&report.ratio_out) {
        w.write_record([n.to_string(), r.to_string(), report.fit_slope.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

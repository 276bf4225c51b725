//! Python bindings. Domains, windows and fields are passed as JSON strings in
//! the same format as the experiment configs; reports come back as dicts.

use std::path::PathBuf;

use betaldp::bernstein::bm_sequence;
use betaldp::ensembles::{self, ChainOptions, EnsembleConfig};
use betaldp::experiments::{self, ExperimentConfig};
use betaldp::normconst;
use betaldp::potential::{self, rate_function, green_function};
use betaldp::{Complex64, Domain, DomainGrid, Error, FieldSpec, SolverOptions, Window};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(pybetaldp, HypothesisViolation, PyException, "A required hypothesis failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::HypothesisViolation { .. } => HypothesisViolation::new_err(e.to_string()),
        Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned>(json: &str) -> PyResult<T> {
    serde_json::from_str(json).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

/// External field: `beta` and a potential `Q` given as JSON.
#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: FieldSpec,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (beta, q, superlog_b=None))]
    fn new(beta: f64, q: &str, superlog_b: Option<f64>) -> PyResult<Self> {
        let mut inner = FieldSpec::new(beta, parse(q)?).map_err(to_py)?;
        inner.superlog_b = superlog_b;
        Ok(PyField { inner })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn q(&self, z: Complex64) -> f64 {
        self.inner.q(z)
    }

    /// Weight exponent `R = 2Q/beta`.
    fn r(&self, z: Complex64) -> f64 {
        self.inner.r(z)
    }

    fn __repr__(&self) -> String {
        format!("Field(beta={}, q={})", self.inner.beta, normconst::field_tag(&self.inner))
    }
}

/// Discretised domain `Y` with its reference measure.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: DomainGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (domain, resolution, tau_scale=1.0))]
    fn new(domain: &str, resolution: usize, tau_scale: f64) -> PyResult<Self> {
        let d: Domain = parse(domain)?;
        let g = DomainGrid::cells(&d, resolution).map_err(to_py)?;
        Ok(PyGrid {
            inner: if tau_scale != 1.0 { g.with_tau_scale(tau_scale) } else { g },
        })
    }

    /// `[-r, r]` (or the disc of radius `r`) standing in for the unbounded line (plane).
    #[staticmethod]
    #[pyo3(signature = (field, resolution, plane=false))]
    fn truncated(field: &PyField, resolution: usize, plane: bool) -> PyResult<Self> {
        let b = field.inner.superlog_b.unwrap_or(1.0);
        let g = if plane {
            DomainGrid::truncated_plane(&field.inner, b, resolution)
        } else {
            DomainGrid::truncated_line(&field.inner, b, resolution)
        };
        Ok(PyGrid { inner: g.map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn nodes(&self) -> Vec<Complex64> {
        self.inner.nodes.clone()
    }

    #[getter]
    fn tau_mass(&self) -> Vec<f64> {
        self.inner.tau_mass.clone()
    }

    #[getter]
    fn cell_size(&self) -> f64 {
        self.inner.cell_size
    }
}

#[pyclass(name = "Equilibrium", frozen)]
struct PyEquilibrium {
    inner: potential::EquilibriumSolution,
}

#[pymethods]
impl PyEquilibrium {
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy
    }

    #[getter]
    fn kkt_residual(&self) -> f64 {
        self.inner.kkt_residual
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.measure.weights().to_vec()
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support_sr.clone()
    }

    #[getter]
    fn contact_set(&self) -> Vec<usize> {
        self.inner.support_srstar.clone()
    }

    fn support_radius(&self) -> f64 {
        self.inner.support_radius()
    }

    fn green(&self, z: Complex64) -> f64 {
        green_function(&self.inner, z)
    }

    fn rate(&self, z: Complex64) -> f64 {
        rate_function(&self.inner, z)
    }

    /// Infimum of the rate function over a window.
    fn predicted_rate(&self, window: &str) -> PyResult<f64> {
        Ok(ensembles::predicted_rate(&self.inner, &parse(window)?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_json(&path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Equilibrium(rho={:.6}, kkt_residual={:.2e}, converged={})",
            self.inner.rho, self.inner.kkt_residual, self.inner.converged
        )
    }
}

#[pyfunction]
#[pyo3(signature = (grid, field, max_iters=50_000, gap_tol=1e-8))]
fn solve_equilibrium(py: Python<'_>, grid: &PyGrid, field: &PyField, max_iters: usize, gap_tol: f64) -> PyResult<PyEquilibrium> {
    let opts = SolverOptions {
        max_iters,
        gap_tol,
        ..SolverOptions::default()
    };
    let (g, f) = (&grid.inner, &field.inner);
    let inner = py.detach(|| potential::solve_equilibrium(g, f, &opts)).map_err(to_py)?;
    Ok(PyEquilibrium { inner })
}

/// Metropolis chains for the `n`-point ensemble; returns per-chain stats,
/// outlier estimates and final configurations.
#[pyfunction]
#[pyo3(signature = (grid, field, n, sweeps, seeds, window="{\"kind\":\"all\"}", burn_in=None, conditional_every=0))]
#[allow(clippy::too_many_arguments)]
fn sample<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    field: &PyField,
    n: usize,
    sweeps: usize,
    seeds: Vec<u64>,
    window: &str,
    burn_in: Option<usize>,
    conditional_every: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let w: Window = parse(window)?;
    let cfg = EnsembleConfig::new(n, field.inner.clone(), grid.inner.clone(), w).map_err(to_py)?;
    let opts = ChainOptions {
        burn_in,
        conditional_every,
        ..ChainOptions::new(sweeps, 0)
    };
    let chains = py.detach(|| ensembles::run_chains(&cfg, &opts, &seeds)).map_err(to_py)?;
    let report = serde_json::json!({
        "stats": chains.iter().map(|c| &c.stats).collect::<Vec<_>>(),
        "psi": ensembles::estimate_outlier_prob(&cfg, &chains),
        "psi_exchangeable": ensembles::estimate_exchangeable_prob(&cfg, &chains),
        "psi_any": ensembles::estimate_any_coordinate_prob(&cfg, &chains),
        "psi_conditional": (conditional_every > 0).then(|| ensembles::estimate_conditional_prob(&cfg, &chains)),
        "final_points": chains.iter().map(|c| c.final_state.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    to_dict(py, &report)
}

/// Exact `log Z_n`, `psi_n(W)` and `E[|z_1|^2]` by tensor quadrature (`n <= 3`).
#[pyfunction]
#[pyo3(signature = (grid, field, n, window="{\"kind\":\"all\"}", order=16))]
fn small_n_quadrature<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    field: &PyField,
    n: usize,
    window: &str,
    order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let w: Window = parse(window)?;
    let q = normconst::small_n_quadrature(&grid.inner, &field.inner, &w, n, order).map_err(to_py)?;
    to_dict(
        py,
        &serde_json::json!({"n": q.n, "log_z": q.log_z, "error": q.error, "psi": q.psi, "psi_any": q.psi_any, "mean_z1_sq": q.mean_z1_sq}),
    )
}

/// `log h_n` and the telescoping increment from chains on `n - 1` points.
#[pyfunction]
#[pyo3(signature = (grid, field, n, sweeps, seeds, every=10, burn_in=None))]
#[allow(clippy::too_many_arguments)]
fn ratio_estimate_h_n<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    field: &PyField,
    n: usize,
    sweeps: usize,
    seeds: Vec<u64>,
    every: usize,
    burn_in: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = ChainOptions {
        burn_in,
        ..ChainOptions::new(sweeps, 0)
    };
    let (g, f) = (&grid.inner, &field.inner);
    let r = py
        .detach(|| normconst::ratio_estimate_h_n(g, f, n, &opts, &seeds, every))
        .map_err(to_py)?;
    to_dict(py, &r)
}

/// `(n, M_n, M_n^(1/n))` rows plus the verdict fields.
#[pyfunction]
fn bernstein_markov<'py>(py: Python<'py>, grid: &PyGrid, field: &PyField, ns: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let (g, f) = (&grid.inner, &field.inner);
    let rep = py.detach(|| bm_sequence(g, f, &ns)).map_err(to_py)?;
    to_dict(py, &rep)
}

/// Run a JSON experiment config; returns the verdict document.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &str, out: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(config).map_err(to_py)?;
    let o = py.detach(|| experiments::run_experiment(&cfg, &out)).map_err(to_py)?;
    to_dict(py, &o)
}

#[pymodule]
fn pybetaldp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HypothesisViolation", m.py().get_type::<HypothesisViolation>())?;
    m.add_class::<PyField>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_function(wrap_pyfunction!(solve_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(small_n_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_estimate_h_n, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_markov, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

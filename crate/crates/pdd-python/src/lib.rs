//! Python bindings for the decomposition solver.
//!
//! The module mirrors the high-level library surface: closed-form
//! references, the two Monte Carlo point estimators, the positive-part
//! fit, the branching growth check, and the full two-stage pipeline. Heavy
//! lifting stays in the core crate; this layer only converts arguments and
//! results.

use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pdd::branching::{
    check_marked_assumptions, estimate_branching, AssumptionCase, BranchingSpec,
};
use pdd::error::PddError;
use pdd::feynman_kac::{estimate_point, LinearBvpSpec};
use pdd::orchestrator::{preset, run_pdd, PddConfig, ProblemKind, RunSettings, Stage1};
use pdd::rng::RngStream;

fn py_err(e: PddError) -> PyErr {
    match e {
        PddError::InvalidArgument(_) | PddError::Config(_) | PddError::ConfigParse(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_kind(name: &str) -> PyResult<ProblemKind> {
    name.parse::<ProblemKind>().map_err(py_err)
}

fn branching_spec(kind: ProblemKind) -> PyResult<BranchingSpec> {
    match preset(kind, None, None).map_err(py_err)?.stage1 {
        Stage1::Branching(spec) => Ok(spec),
        Stage1::Linear(_) => Err(PyValueError::new_err(format!(
            "problem '{kind}' uses the linear estimator, not a branching tree"
        ))),
    }
}

fn linear_spec(kind: ProblemKind) -> PyResult<LinearBvpSpec> {
    match preset(kind, None, None).map_err(py_err)?.stage1 {
        Stage1::Linear(spec) => Ok(spec),
        Stage1::Branching(_) => Err(PyValueError::new_err(format!(
            "problem '{kind}' uses a branching tree, not the linear estimator"
        ))),
    }
}

fn case_name(case: AssumptionCase) -> &'static str {
    match case {
        AssumptionCase::Contraction => "contraction",
        AssumptionCase::BoundedGrowth => "bounded_growth",
        AssumptionCase::WithinHorizonBound => "within_horizon_bound",
        AssumptionCase::Violated => "violated",
    }
}

/// Closed-form reference solution of a preset problem at `(x, t)`.
#[pyfunction]
fn reference_value(problem: &str, x: f64, t: f64) -> PyResult<f64> {
    let pre = preset(parse_kind(problem)?, None, None).map_err(py_err)?;
    match &pre.closed_form {
        Some(f) => Ok(f(x, t)),
        None => Err(PyValueError::new_err(format!(
            "problem '{}' has no closed form",
            pre.kind
        ))),
    }
}

/// Branching-tree estimate of a semilinear preset at `(x, t)`.
///
/// Returns `(value, std_error)`.
#[pyfunction(signature = (problem, x, t, n = 20_000, seed = 0))]
fn estimate_semilinear(problem: &str, x: f64, t: f64, n: u64, seed: u64) -> PyResult<(f64, f64)> {
    let spec = branching_spec(parse_kind(problem)?)?;
    let est =
        estimate_branching(&spec, &[x], &[t], n, RngStream::for_node(seed, 0)).map_err(py_err)?;
    Ok((est.values[0], est.std_errors[0]))
}

/// Pathwise estimate of the stationary preset at `(x, y)`.
///
/// Returns `(value, std_error)`.
#[pyfunction(signature = (x, y, n = 10_000, dt = 2e-5, seed = 0))]
fn estimate_stationary(x: f64, y: f64, n: u64, dt: f64, seed: u64) -> PyResult<(f64, f64)> {
    let spec = linear_spec(ProblemKind::Elliptic)?;
    let est =
        estimate_point(&spec, &[x, y], 0.0, n, dt, RngStream::for_node(seed, 0)).map_err(py_err)?;
    Ok((est.value, est.std_error))
}

/// Least-squares polynomial fit of `max(v, 0)` on the standard interval.
///
/// Returns `(coefficients_in_increasing_degree, max_abs_residual)`.
#[pyfunction(signature = (degree = 4))]
fn fit_positive_part(degree: usize) -> PyResult<(Vec<f64>, f64)> {
    let fit = pdd::branching::fit_positive_part(degree).map_err(py_err)?;
    Ok((fit.coeffs, fit.max_abs_residual))
}

/// Growth/integrability report of a branching preset over `horizon`.
#[pyfunction(signature = (problem = "cva", horizon = 0.25))]
fn check_assumptions(py: Python<'_>, problem: &str, horizon: f64) -> PyResult<Py<PyDict>> {
    let spec = branching_spec(parse_kind(problem)?)?;
    let report = check_marked_assumptions(&spec, horizon).map_err(py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("case", case_name(report.case))?;
    dict.set_item("l_at_one", report.l_at_one)?;
    dict.set_item("t_star", report.t_star)?;
    dict.set_item("horizon", report.horizon)?;
    dict.set_item("admissible", report.admissible())?;
    dict.set_item("note", report.note)?;
    Ok(dict.unbind())
}

/// Result of a full two-stage run. Grid values are row-major with the
/// decomposition axis outermost.
#[pyclass(frozen)]
struct RunResult {
    #[pyo3(get)]
    kind: String,
    #[pyo3(get)]
    label: String,
    #[pyo3(get)]
    stationary: bool,
    #[pyo3(get)]
    subdomains: usize,
    #[pyo3(get)]
    cuts: Vec<f64>,
    #[pyo3(get)]
    levels: Vec<f64>,
    #[pyo3(get)]
    axes: Vec<Vec<f64>>,
    #[pyo3(get)]
    values: Vec<f64>,
    #[pyo3(get)]
    shape: (usize, usize),
    #[pyo3(get)]
    max_abs_error: Option<f64>,
    #[pyo3(get)]
    rms_error: Option<f64>,
    #[pyo3(get)]
    stage1_seconds: f64,
    #[pyo3(get)]
    stage2_seconds: f64,
    #[pyo3(get)]
    max_interface_std_error: f64,
    #[pyo3(get)]
    restarts: u64,
    interface: Option<Vec<(f64, f64, f64, f64, u64)>>,
}

#[pymethods]
impl RunResult {
    /// Solution value at grid index `(i, j)`.
    fn value(&self, i: usize, j: usize) -> PyResult<f64> {
        let (ni, nj) = self.shape;
        if i >= ni || j >= nj {
            return Err(PyIndexError::new_err(format!(
                "index ({i}, {j}) out of bounds for shape ({ni}, {nj})"
            )));
        }
        Ok(self.values[i * nj + j])
    }

    /// Interface nodes as `(cut, level, estimate, std_error, n_samples)`
    /// tuples, or `None` for a monolithic run.
    fn interface_nodes(&self) -> Option<Vec<(f64, f64, f64, f64, u64)>> {
        self.interface.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(kind='{}', subdomains={}, shape={:?}, max_abs_error={:?})",
            self.kind, self.subdomains, self.shape, self.max_abs_error
        )
    }
}

/// Run the full pipeline from an optional TOML config plus overrides.
#[pyfunction(signature = (
    config = None,
    *,
    problem = None,
    subdomains = None,
    time_levels = None,
    samples = None,
    seed = None,
    workers = None
))]
#[allow(clippy::too_many_arguments)]
fn run(
    config: Option<&str>,
    problem: Option<&str>,
    subdomains: Option<usize>,
    time_levels: Option<usize>,
    samples: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> PyResult<RunResult> {
    let mut settings: RunSettings = match config {
        Some(path) => PddConfig::from_path(path.as_ref())
            .and_then(|cfg| cfg.resolve())
            .map_err(py_err)?,
        None => RunSettings::default(),
    };
    if let Some(name) = problem {
        settings.kind = parse_kind(name)?;
    }
    if let Some(p) = subdomains {
        settings.subdomains = p;
    }
    if let Some(levels) = time_levels {
        settings.time_levels = levels;
    }
    if let Some(n) = samples {
        settings.mc_samples = n;
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    if let Some(w) = workers {
        settings.workers = w;
    }
    let run = run_pdd(&settings).map_err(py_err)?;

    let shape = {
        let s = run.solution.shape();
        (s[0], s[1])
    };
    let interface = run.interface.as_ref().map(|grid| {
        let mut rows = Vec::with_capacity(grid.node_count());
        for c in 0..grid.cuts().len() {
            for l in 0..grid.levels().len() {
                let (cut, level) = grid.node(c, l);
                if let Some(v) = grid.value(c, l) {
                    rows.push((cut, level, v.estimate, v.std_error, v.n_samples));
                }
            }
        }
        rows
    });
    Ok(RunResult {
        kind: run.kind.to_string(),
        label: run.label,
        stationary: run.stationary,
        subdomains: run.subdomains,
        cuts: run.cuts,
        levels: run.levels,
        axes: run.solution.axes.clone(),
        values: run.solution.values.clone(),
        shape,
        max_abs_error: run.errors.map(|e| e.max_abs),
        rms_error: run.errors.map(|e| e.rms),
        stage1_seconds: run.timings.stage1_wall_seconds,
        stage2_seconds: run.timings.stage2_wall_seconds,
        max_interface_std_error: run.max_interface_std_error,
        restarts: run.restarts,
        interface,
    })
}

#[pymodule]
fn pdd_python(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(reference_value, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_semilinear, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(fit_positive_part, m)?)?;
    m.add_function(wrap_pyfunction!(check_assumptions, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<RunResult>()?;
    Ok(())
}

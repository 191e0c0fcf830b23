//! Python bindings: parameter classes, bounds, certification, sweeps and
//! the annealing integrands.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qsl_ibie::anneal::{self, AnnealParams, Protocol};
use qsl_ibie::report::{self, ModelParams, Row, SweepSpec};
use qsl_ibie::stirap::{self, StirapParams};
use qsl_ibie::{qsl, selftest, BoundReport, Error};

create_exception!(qsl_ibie_py, QslError, PyValueError);
create_exception!(qsl_ibie_py, ScheduleSingularityError, QslError);
create_exception!(qsl_ibie_py, CertificationViolationError, QslError);
create_exception!(qsl_ibie_py, AccuracyError, QslError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::ScheduleSingularity { .. } => ScheduleSingularityError::new_err(msg),
        Error::CertificationViolation { .. } => CertificationViolationError::new_err(msg),
        Error::Accuracy { .. } => AccuracyError::new_err(msg),
        _ => QslError::new_err(msg),
    }
}

#[pyclass(name = "StirapParams", skip_from_py_object)]
#[derive(Clone)]
struct PyStirapParams {
    inner: StirapParams,
}

#[pymethods]
impl PyStirapParams {
    #[new]
    #[pyo3(signature = (delta, epsilon = 0.1, t_final = 10.0, omega0 = 1.0))]
    fn new(delta: f64, epsilon: f64, t_final: f64, omega0: f64) -> PyResult<Self> {
        let inner = StirapParams {
            delta,
            epsilon,
            t_final,
            omega0,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }
    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }
    #[getter]
    fn omega_max(&self) -> f64 {
        self.inner.omega_max()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "StirapParams(delta={}, epsilon={}, t_final={}, omega0={})",
            p.delta, p.epsilon, p.t_final, p.omega0
        )
    }
}

#[pyclass(name = "AnnealParams", skip_from_py_object)]
#[derive(Clone)]
struct PyAnnealParams {
    inner: AnnealParams,
}

#[pymethods]
impl PyAnnealParams {
    #[new]
    #[pyo3(signature = (
        n = 100, j = 1.0, h = 1.0, gamma_field = 1.0,
        eps_gamma = std::f64::consts::PI / 8.0, eps_beta = 0.01, t_final = 10.0,
        protocol = "linear", h0 = 1.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        j: f64,
        h: f64,
        gamma_field: f64,
        eps_gamma: f64,
        eps_beta: f64,
        t_final: f64,
        protocol: &str,
        h0: f64,
    ) -> PyResult<Self> {
        let inner = AnnealParams {
            n_qubits: n,
            coupling: j,
            longitudinal: h,
            transverse: gamma_field,
            eps_gamma,
            eps_beta,
            t_final,
            protocol: protocol.parse::<Protocol>().map_err(to_py)?,
            h0,
        };
        Ok(Self {
            inner: inner.checked().map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n_qubits
    }
    #[getter]
    fn eps_gamma(&self) -> f64 {
        self.inner.eps_gamma
    }
    #[getter]
    fn eps_beta(&self) -> f64 {
        self.inner.eps_beta
    }
    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "AnnealParams(n={}, j={}, h={}, gamma_field={}, eps_gamma={}, eps_beta={}, t_final={}, protocol='{}', h0={})",
            p.n_qubits, p.coupling, p.longitudinal, p.transverse, p.eps_gamma, p.eps_beta, p.t_final, p.protocol, p.h0
        )
    }
}

#[pyclass(name = "BoundReport", frozen, skip_from_py_object)]
struct PyBoundReport {
    inner: BoundReport,
}

#[pymethods]
impl PyBoundReport {
    #[getter]
    fn action(&self) -> f64 {
        self.inner.action
    }
    #[getter]
    fn lower_bound(&self) -> f64 {
        self.inner.lower_bound
    }
    #[getter]
    fn trivial(&self) -> bool {
        self.inner.trivial
    }
    #[getter]
    fn true_overlap(&self) -> Option<f64> {
        self.inner.true_overlap
    }
    #[getter]
    fn margin(&self) -> Option<f64> {
        self.inner.margin
    }
    #[getter]
    fn diagnostics(&self) -> BTreeMap<String, f64> {
        self.inner.diagnostics.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundReport(action={}, lower_bound={}, trivial={}, true_overlap={:?})",
            self.inner.action, self.inner.lower_bound, self.inner.trivial, self.inner.true_overlap
        )
    }
}

fn wrap(r: BoundReport) -> PyBoundReport {
    PyBoundReport { inner: r }
}

/// Lower bound from an action: `cos(action)`, or 0 once it reaches `pi/2`.
#[pyfunction]
fn lower_bound_from_action(action: f64) -> PyResult<PyBoundReport> {
    qsl::lower_bound_from_action(action).map(wrap).map_err(to_py)
}

/// STIRAP bound by quadrature; with `certify`, also propagates the true
/// dynamics.
#[pyfunction]
#[pyo3(signature = (params, steps = 4000, certify = false))]
fn stirap_bound(py: Python<'_>, params: &PyStirapParams, steps: usize, certify: bool) -> PyResult<PyBoundReport> {
    let p = params.inner;
    py.detach(|| if certify { stirap::run(&p, steps) } else { stirap::bound(&p, steps) })
        .map(wrap)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (params, steps = 4000, certify = false))]
fn anneal_bound(py: Python<'_>, params: &PyAnnealParams, steps: usize, certify: bool) -> PyResult<PyBoundReport> {
    let p = params.inner;
    py.detach(|| anneal::bound(&p, steps, certify)).map(wrap).map_err(to_py)
}

#[pyfunction]
fn sigma_closed_form(params: &PyAnnealParams, t: f64) -> PyResult<f64> {
    anneal::sigma_closed_form(&params.inner, t).map_err(to_py)
}

#[pyfunction]
fn sigma_moment_oracle(params: &PyAnnealParams, t: f64) -> PyResult<f64> {
    anneal::sigma_moment_oracle(&params.inner, t).map_err(to_py)
}

/// `(A, B)` annealing schedules at time `t`.
#[pyfunction]
fn schedules(params: &PyAnnealParams, t: f64) -> PyResult<(f64, f64)> {
    anneal::schedules(&params.inner, t).map_err(to_py)
}

/// Amplitudes of the designed spin coherent state as `(re, im)` pairs.
#[pyfunction]
fn anneal_designed_state(params: &PyAnnealParams, t: f64) -> PyResult<Vec<(f64, f64)>> {
    let s = anneal::designed_state(&params.inner, t).map_err(to_py)?;
    Ok(s.amplitudes().iter().map(|z| (z.re, z.im)).collect())
}

fn model_params(obj: &Bound<'_, PyAny>) -> PyResult<ModelParams> {
    if let Ok(p) = obj.cast::<PyStirapParams>() {
        return Ok(ModelParams::Stirap(p.borrow().inner));
    }
    if let Ok(p) = obj.cast::<PyAnnealParams>() {
        return Ok(ModelParams::Anneal(p.borrow().inner));
    }
    Err(QslError::new_err("params must be StirapParams or AnnealParams"))
}

fn run_sweep(py: Python<'_>, params: &Bound<'_, PyAny>, spec: &str, steps: usize, certify: bool) -> PyResult<Vec<Row>> {
    let base = model_params(params)?;
    let spec = SweepSpec::parse(spec).map_err(to_py)?;
    py.detach(|| report::run_sweep(base, &spec, steps, certify)).map_err(to_py)
}

/// Sweeps one real parameter (`name:start:stop:count[:log]`) and returns
/// `(value, report, singular)` triples in grid order.
#[pyfunction]
#[pyo3(signature = (params, spec, steps = 4000, certify = false))]
fn sweep(
    py: Python<'_>,
    params: &Bound<'_, PyAny>,
    spec: &str,
    steps: usize,
    certify: bool,
) -> PyResult<Vec<(f64, PyBoundReport, bool)>> {
    let rows = run_sweep(py, params, spec, steps, certify)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.swept_value.unwrap_or(f64::NAN), wrap(r.report), r.singular))
        .collect())
}

/// The same sweep rendered as the command-line CSV.
#[pyfunction]
#[pyo3(signature = (params, spec, steps = 4000, certify = false))]
fn sweep_csv(py: Python<'_>, params: &Bound<'_, PyAny>, spec: &str, steps: usize, certify: bool) -> PyResult<String> {
    let rows = run_sweep(py, params, spec, steps, certify)?;
    report::to_csv(&rows).map_err(to_py)
}

/// `(name, passed, value, tolerance)` for each internal check.
#[pyfunction(name = "selftest")]
fn run_selftest(py: Python<'_>) -> Vec<(String, bool, f64, f64)> {
    py.detach(selftest::run_all)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.value, c.tolerance))
        .collect()
}

#[pymodule]
fn qsl_ibie_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyStirapParams>()?;
    m.add_class::<PyAnnealParams>()?;
    m.add_class::<PyBoundReport>()?;
    m.add_function(wrap_pyfunction!(lower_bound_from_action, m)?)?;
    m.add_function(wrap_pyfunction!(stirap_bound, m)?)?;
    m.add_function(wrap_pyfunction!(anneal_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_moment_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(schedules, m)?)?;
    m.add_function(wrap_pyfunction!(anneal_designed_state, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add("QslError", py.get_type::<QslError>())?;
    m.add("ScheduleSingularityError", py.get_type::<ScheduleSingularityError>())?;
    m.add("CertificationViolationError", py.get_type::<CertificationViolationError>())?;
    m.add("AccuracyError", py.get_type::<AccuracyError>())?;
    Ok(())
}

//! Python bindings: states, grids, residual checks, trajectories, the
//! conservation experiment and scenario runs. Structured results are
//! returned as plain dicts and lists.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use qfluid::dynamics::{self, TrajectoryOptions, VelocityKind};
use qfluid::fields::{self, FieldOptions, Provenance, Sign};
use qfluid::grid::Grid;
use qfluid::residuals::{self, CheckOptions};
use qfluid::scenario::{self, GridSpec, RunOptions, Scenario};
use qfluid::states;
use qfluid::Error;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

create_exception!(qfluid_py, QfluidError, PyException, "Base class of qfluid errors.");
create_exception!(qfluid_py, ConfigError, QfluidError, "Invalid or unreadable configuration.");
create_exception!(qfluid_py, UnknownCheckError, ConfigError, "Unknown equation_id.");
create_exception!(qfluid_py, BudgetExceededError, ConfigError, "Grid exceeds the point budget.");
create_exception!(qfluid_py, PreconditionError, QfluidError, "A check or operation does not apply.");

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::UnknownCheck(_) => UnknownCheckError::new_err(msg),
        Error::BudgetExceeded { .. } => BudgetExceededError::new_err(msg),
        Error::Io(_)
        | Error::Json(_)
        | Error::Scenario(_)
        | Error::Label { .. }
        | Error::UnsupportedState(_)
        | Error::InvalidGrid(_) => ConfigError::new_err(msg),
        Error::Precondition(_) | Error::Nodal(_) | Error::NotCartesian => PreconditionError::new_err(msg),
        _ => QfluidError::new_err(msg),
    }
}

/// Converts any serializable value to Python objects through JSON.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| py_err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(text.into()))
        .map_err(|_| ConfigError::new_err(format!("unknown {what} `{text}`")))
}

/// A catalog wavefunction, built from a label such as `hydrogen_1s` or
/// `superpose:[1/sqrt(2)*box:k=1; 1/sqrt(2)*box:k=2]`.
#[pyclass(name = "AnalyticState", frozen, module = "qfluid_py")]
struct PyState(states::AnalyticState);

#[pymethods]
impl PyState {
    #[new]
    fn new(label: &str) -> PyResult<Self> {
        states::AnalyticState::from_label(label).map(PyState).map_err(py_err)
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label().to_string()
    }

    #[getter]
    fn n_bodies(&self) -> usize {
        self.0.n_bodies()
    }

    #[getter]
    fn dim_per_body(&self) -> usize {
        self.0.dim_per_body()
    }

    /// Ē for eigenstates (and equal-energy superpositions), else None.
    #[getter]
    fn energy(&self) -> Option<f64> {
        self.0.energy_if_eigen()
    }

    fn psi(&self, x: Vec<f64>, t: f64) -> PyResult<Complex64> {
        self.0.check_point(&x).map_err(py_err)?;
        Ok(self.0.eval_psi(&x, t))
    }

    fn rho(&self, x: Vec<f64>, t: f64) -> PyResult<f64> {
        Ok(self.psi(x, t)?.norm_sqr())
    }

    /// (Ē_S, Ē_θ) at one point from the time derivative of Ψ.
    fn energies(&self, x: Vec<f64>, t: f64) -> PyResult<(f64, f64)> {
        fields::energies_time_side(&self.0, &x, t).map_err(py_err)
    }

    /// Exact velocity of `kind` (u_minus, u_plus, v, u_spin, w_sum).
    #[pyo3(signature = (kind, x, t = 0.0))]
    fn velocity(&self, kind: &str, x: Vec<f64>, t: f64) -> PyResult<Vec<f64>> {
        let kind: VelocityKind = parse("velocity kind", kind)?;
        dynamics::velocity_at(&self.0, kind, &x, t, &TrajectoryOptions::default()).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("AnalyticState('{}')", self.0.label())
    }
}

/// A sampling grid from a compact spec (`radial:n=400,r_max=40`,
/// `cartesian:lower=(0,0),upper=(pi,pi),n=(64,64)`) or JSON.
#[pyclass(name = "Grid", frozen, module = "qfluid_py")]
struct PyGrid(Arc<Grid>);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: GridSpec = spec.parse().map_err(py_err)?;
        Ok(PyGrid(Arc::new(spec.build().map_err(py_err)?)))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn point(&self, idx: usize) -> PyResult<Vec<f64>> {
        if idx >= self.0.len() {
            return Err(pyo3::exceptions::PyIndexError::new_err(idx));
        }
        Ok(self.0.point(idx))
    }

    #[getter]
    fn max_spacing(&self) -> f64 {
        self.0.max_spacing()
    }

    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.meta())
    }
}

/// `[(id, label, description), ...]` for every registered check.
#[pyfunction]
fn list_checks() -> Vec<(String, String, String)> {
    residuals::list_checks()
        .iter()
        .map(|c| (c.id.into(), c.label.into(), c.description.into()))
        .collect()
}

/// Runs one residual check and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (check_id, state, grid, t = 0.0, provenance = "analytic", tolerance = None, sign = "minus", split_a = 0.5))]
#[allow(clippy::too_many_arguments)]
fn run_check<'py>(
    py: Python<'py>,
    check_id: &str,
    state: &PyState,
    grid: &PyGrid,
    t: f64,
    provenance: &str,
    tolerance: Option<f64>,
    sign: &str,
    split_a: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = CheckOptions {
        provenance: parse("provenance", provenance)?,
        tolerance,
        sign: parse("sign", sign)?,
        split_a,
        ..Default::default()
    };
    let report = py
        .detach(|| residuals::run_check(check_id, &state.0, &grid.0, t, &opts))
        .map_err(py_err)?;
    to_py(py, &report)
}

/// Named field columns of a state on a grid at time `t`.
#[pyfunction]
#[pyo3(signature = (state, grid, t = 0.0, provenance = "analytic", sign = "minus"))]
fn field_bundle<'py>(
    py: Python<'py>,
    state: &PyState,
    grid: &PyGrid,
    t: f64,
    provenance: &str,
    sign: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = FieldOptions {
        provenance: parse::<Provenance>("provenance", provenance)?,
        sign: parse::<Sign>("sign", sign)?,
        ..Default::default()
    };
    let b = py.detach(|| fields::bundle(&state.0, &grid.0, t, &opts)).map_err(py_err)?;
    let cols: std::collections::BTreeMap<String, Vec<f64>> =
        b.columns().into_iter().map(|c| (c.name, c.values)).collect();
    // NaN (masked nodes) is kept as float('nan') rather than JSON null.
    let dict = pyo3::types::PyDict::new(py);
    for (name, values) in cols {
        dict.set_item(name, values)?;
    }
    Ok(dict.into_any())
}

/// RK4 path along a velocity field plus ∇·vel, ∇·(ρ·vel) and ρ along it.
#[pyfunction]
#[pyo3(signature = (state, seed, velocity, dt, steps, t0 = 0.0, sign = "minus", renormalize_spin = false))]
#[allow(clippy::too_many_arguments)]
fn integrate_trajectory<'py>(
    py: Python<'py>,
    state: &PyState,
    seed: Vec<f64>,
    velocity: &str,
    dt: f64,
    steps: usize,
    t0: f64,
    sign: &str,
    renormalize_spin: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = TrajectoryOptions {
        t0,
        sign: parse("sign", sign)?,
        renormalize_spin,
        ..Default::default()
    };
    let kind: VelocityKind = parse("velocity kind", velocity)?;
    let (tr, flux) = py
        .detach(|| {
            let tr = dynamics::integrate_trajectory(&state.0, &seed, kind, dt, steps, &opts)?;
            let flux = dynamics::mass_flux_along(&tr, &state.0, &opts)?;
            Ok::<_, Error>((tr, flux))
        })
        .map_err(py_err)?;
    let out = to_py(py, &tr)?;
    out.set_item("div_velocity", flux.div_velocity)?;
    Ok(out)
}

/// Space-integrated Ē_S and Ē_θ of Σ C_kφ_k over `times`.
#[pyfunction]
fn conservation_experiment<'py>(
    py: Python<'py>,
    components: Vec<PyRef<'py, PyState>>,
    coeffs: Vec<Complex64>,
    grid: &PyGrid,
    times: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let comps: Vec<states::AnalyticState> = components.iter().map(|s| s.0.clone()).collect();
    let series = py
        .detach(|| dynamics::conservation_experiment(&comps, &coeffs, &grid.0, &times))
        .map_err(py_err)?;
    let out = to_py(py, &series)?;
    out.set_item("E_S_std", series.e_s_std())?;
    Ok(out)
}

/// Runs a scenario given as JSON text and returns the manifest.
#[pyfunction]
#[pyo3(signature = (scenario_json, output_dir = None, jobs = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario_json: &str,
    output_dir: Option<PathBuf>,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = Scenario::from_json(scenario_json).map_err(py_err)?;
    let outcome = py
        .detach(|| scenario::run(&s, &RunOptions { jobs, output_dir }))
        .map_err(py_err)?;
    to_py(py, &outcome.manifest)
}

#[pymodule]
fn qfluid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyState>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(list_checks, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(field_bundle, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(conservation_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("QfluidError", py.get_type::<QfluidError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("UnknownCheckError", py.get_type::<UnknownCheckError>())?;
    m.add("BudgetExceededError", py.get_type::<BudgetExceededError>())?;
    m.add("PreconditionError", py.get_type::<PreconditionError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

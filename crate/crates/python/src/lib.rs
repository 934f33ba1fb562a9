//! Python bindings: configurations, a stepping solver handle and the quick checks.

use espdg_core::basis;
use espdg_core::cases::{self, Problem};
use espdg_core::config::{CaseConfig, CaseKind, InitialPressure};
use espdg_core::diagnostics;
use espdg_core::fluxes::FluxMode;
use espdg_core::output::write_vtk;
use espdg_core::physics::State;
use espdg_core::run::{run as run_case, RunOptions};
use espdg_core::time::Stepper;
use espdg_core::verify;
use espdg_core::Error;
use pyo3::exceptions::{PyFloatingPointError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use std::path::PathBuf;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } => PyFloatingPointError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn parse_case(name: &str) -> PyResult<CaseKind> {
    serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Case configuration.
#[pyclass(module = "espdg", skip_from_py_object)]
#[derive(Clone)]
struct Config {
    inner: CaseConfig,
}

#[pymethods]
impl Config {
    /// Built-in desk-scale configuration of a case.
    #[staticmethod]
    fn preset(case: &str) -> PyResult<Self> {
        Ok(Self { inner: verify::preset(parse_case(case)?) })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        CaseConfig::parse(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    #[getter]
    fn case(&self) -> &'static str {
        self.inner.case.name()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[setter]
    fn set_dt(&mut self, v: f64) {
        self.inner.dt = v;
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[setter]
    fn set_t_final(&mut self, v: f64) {
        self.inner.t_final = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn kappa_beta(&self) -> f64 {
        self.inner.kappa_beta
    }

    #[setter]
    fn set_kappa_beta(&mut self, v: f64) {
        self.inner.kappa_beta = v;
    }

    #[getter]
    fn flux_mode(&self) -> &'static str {
        match self.inner.flux_mode {
            FluxMode::Central => "central",
            FluxMode::Ers => "ers",
        }
    }

    #[setter]
    fn set_flux_mode(&mut self, v: &str) -> PyResult<()> {
        self.inner.flux_mode = match v {
            "central" => FluxMode::Central,
            "ers" => FluxMode::Ers,
            _ => return Err(PyValueError::new_err(format!("unknown flux mode {v:?}"))),
        };
        Ok(())
    }

    #[getter]
    fn degrees(&self) -> [usize; 3] {
        self.inner.degrees
    }

    #[setter]
    fn set_degrees(&mut self, v: [usize; 3]) {
        self.inner.degrees = v;
    }

    #[getter]
    fn counts(&self) -> Option<[usize; 3]> {
        self.inner.mesh.counts
    }

    #[setter]
    fn set_counts(&mut self, v: [usize; 3]) {
        self.inner.mesh.counts = Some(v);
    }

    #[getter]
    fn initial_pressure(&self) -> &'static str {
        match self.inner.initial_pressure {
            InitialPressure::Zero => "zero",
            InitialPressure::Hydrostatic => "hydrostatic",
        }
    }

    #[setter]
    fn set_initial_pressure(&mut self, v: &str) -> PyResult<()> {
        self.inner.initial_pressure = match v {
            "zero" => InitialPressure::Zero,
            "hydrostatic" => InitialPressure::Hydrostatic,
            _ => return Err(PyValueError::new_err(format!("unknown initial pressure {v:?}"))),
        };
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("Config(case={:?}, degrees={:?}, dt={:e})", self.inner.case.name(), self.inner.degrees, self.inner.dt)
    }
}

/// A problem together with its time stepper.
#[pyclass(module = "espdg")]
struct Solver {
    problem: Problem,
    q: Vec<State>,
    stepper: Stepper,
}

#[pymethods]
impl Solver {
    #[new]
    fn new(config: &Config) -> PyResult<Self> {
        let cfg = &config.inner;
        cfg.validate().map_err(to_py)?;
        let problem = Problem::from_config(cfg).map_err(to_py)?;
        let stepper = Stepper::new(&problem.op, cfg.integrator, cfg.dt, 0.0).map_err(to_py)?;
        let q = problem.q.clone();
        Ok(Self { problem, q, stepper })
    }

    #[pyo3(signature = (n = 1))]
    fn step(&mut self, py: Python<'_>, n: usize) -> PyResult<()> {
        let Self { problem, q, stepper } = self;
        py.detach(|| {
            for _ in 0..n {
                stepper.step(&problem.op, q)?;
            }
            Ok(())
        })
        .map_err(to_py)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.stepper.t
    }

    #[getter]
    fn steps(&self) -> usize {
        self.stepper.steps
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.q.len()
    }

    fn coordinates(&self) -> Vec<[f64; 3]> {
        self.problem.op.mesh.x.clone()
    }

    /// Conservative state `(c, sqrt(rho) u, sqrt(rho) v, sqrt(rho) w, p)` per node.
    fn state(&self) -> Vec<[f64; 5]> {
        self.q.clone()
    }

    fn set_state(&mut self, q: Vec<[f64; 5]>) -> PyResult<()> {
        if q.len() != self.q.len() {
            return Err(PyValueError::new_err(format!("expected {} nodes, got {}", self.q.len(), q.len())));
        }
        self.q = q;
        Ok(())
    }

    /// Primitive variables `(c, u, v, w, p)` per node.
    fn primitives(&self) -> Vec<[f64; 5]> {
        let p = &self.problem.op.params;
        self.q
            .iter()
            .map(|s| {
                let u = p.velocity(s);
                [s[0], u[0], u[1], u[2], s[4]]
            })
            .collect()
    }

    fn residual_norm(&self) -> f64 {
        let op = &self.problem.op;
        let mut ws = op.workspace();
        op.residual(&self.q, self.stepper.t, &mut ws);
        diagnostics::residual_norm(&ws)
    }

    fn entropy_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let op = &self.problem.op;
        let mut ws = op.workspace();
        op.residual(&self.q, self.stepper.t, &mut ws);
        let r = diagnostics::entropy_report(op, &self.q, &ws);
        json_to_py(py, &serde_json::to_value(r).map_err(|e| PyValueError::new_err(e.to_string()))?)
    }

    /// Centroid, mean velocity and measure of the `C ~ 0` phase.
    fn bubble_observables(&self) -> PyResult<([f64; 3], [f64; 3], f64)> {
        let op = &self.problem.op;
        let (xc, a) = diagnostics::bubble_centroid(op, &self.q).map_err(to_py)?;
        let vc = diagnostics::bubble_velocity(op, &self.q).map_err(to_py)?;
        Ok((xc, vc, a))
    }

    fn l2_errors(&self) -> Option<[f64; 5]> {
        self.problem.errors(&self.q, self.stepper.t)
    }

    fn pressure_jump<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let op = &self.problem.op;
        let mut ws = op.workspace();
        let pj = cases::pressure_jump(op, &self.q, &mut ws).map_err(to_py)?;
        json_to_py(py, &serde_json::to_value(pj).map_err(|e| PyValueError::new_err(e.to_string()))?)
    }

    fn write_vtk(&self, path: PathBuf) -> PyResult<()> {
        let op = &self.problem.op;
        let mut ws = op.workspace();
        op.concentration_gradient(&self.q, &mut ws);
        op.chemical_potential(&self.q, &mut ws);
        write_vtk(&path, &op.mesh, &op.params, &self.q, &ws.mu).map_err(to_py)
    }
}

/// Gauss-Lobatto nodes and weights of degree `n`.
#[pyfunction]
fn gauss_lobatto(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    basis::gauss_lobatto(n).map_err(to_py)
}

/// Quick property checks as `(name, value, tolerance, passed)` tuples.
#[pyfunction]
fn verify_checks(py: Python<'_>) -> Vec<(String, f64, f64, bool)> {
    py.detach(verify::run_checks).into_iter().map(|c| (c.name.to_string(), c.value, c.tol, c.pass())).collect()
}

/// Runs a configuration to completion and returns the run summary.
#[pyfunction]
#[pyo3(signature = (config, out_dir, fields = false))]
fn run<'py>(py: Python<'py>, config: &Config, out_dir: PathBuf, fields: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let opts = RunOptions { out_dir, no_fields: !fields, ..Default::default() };
    let out = py.detach(|| run_case(&cfg, &opts)).map_err(to_py)?;
    json_to_py(py, &serde_json::to_value(&out.summary).map_err(|e| PyValueError::new_err(e.to_string()))?)
}

#[pymodule]
fn espdg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<Solver>()?;
    m.add_function(wrap_pyfunction!(gauss_lobatto, m)?)?;
    m.add_function(wrap_pyfunction!(verify_checks, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

//! Python bindings: phase classification, echoes, extraction and sweeps.

use dicke_phase_lab::echo::{self, QuenchObservables};
use dicke_phase_lab::error::Error;
use dicke_phase_lab::extract;
use dicke_phase_lab::model::{self, region_kinds};
use dicke_phase_lab::sim::InitialSpin;
use dicke_phase_lab::sweep::{self, Engine, PointRequest, SweepConfig};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(dicke_phase_lab_py, DickeError, PyException);
create_exception!(dicke_phase_lab_py, InvalidParamsError, DickeError);
create_exception!(dicke_phase_lab_py, BoundaryError, DickeError);
create_exception!(dicke_phase_lab_py, NumericError, DickeError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::OnBoundary(_) => BoundaryError::new_err(msg),
        Error::DegenerateForm(_)
        | Error::NonConvergence { .. }
        | Error::NormDrift { .. }
        | Error::NonPositiveEcho { .. }
        | Error::WindowTooShort(_) => NumericError::new_err(msg),
        _ => InvalidParamsError::new_err(msg),
    }
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyModelParams {
    inner: model::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (g1, g2, omega = 1.0, omega0 = None, n_atoms = 1))]
    fn new(g1: f64, g2: f64, omega: f64, omega0: Option<f64>, n_atoms: usize) -> PyResult<Self> {
        model::ModelParams::new(omega, omega0.unwrap_or(omega), g1, g2, n_atoms)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn g1(&self) -> f64 {
        self.inner.g1
    }
    #[getter]
    fn g2(&self) -> f64 {
        self.inner.g2
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }
    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }
    #[getter]
    fn n_atoms(&self) -> usize {
        self.inner.n_atoms
    }

    /// Region tag: NP, SP1, SP2, SP3 or Boundary.
    fn region(&self) -> PyResult<&'static str> {
        model::classify_phase(&self.inner).map(|r| r.tag()).map_err(to_py)
    }

    /// `(Ω1, Ω2)`.
    fn frequencies(&self) -> PyResult<(f64, f64)> {
        model::effective_frequencies(&self.inner).map_err(to_py)
    }

    /// Closed-form λ and f.
    fn observables(&self) -> PyResult<Observables> {
        echo::analytic_observables(&self.inner)
            .map(Observables::from)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(g1={}, g2={}, omega={}, omega0={}, n_atoms={})",
            p.g1, p.g2, p.omega, p.omega0, p.n_atoms
        )
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Observables {
    #[pyo3(get, name = "lambda_")]
    lambda: f64,
    #[pyo3(get)]
    f: f64,
    #[pyo3(get)]
    f1: Option<f64>,
    #[pyo3(get)]
    f2: Option<f64>,
}

impl From<QuenchObservables> for Observables {
    fn from(o: QuenchObservables) -> Self {
        Self {
            lambda: o.lambda,
            f: o.f,
            f1: o.f1,
            f2: o.f2,
        }
    }
}

#[pymethods]
impl Observables {
    fn __repr__(&self) -> String {
        format!(
            "Observables(lambda_={}, f={}, f1={:?}, f2={:?})",
            self.lambda, self.f, self.f1, self.f2
        )
    }
}

/// Echo `L(t)` with its log-derivative `D(t)`.
#[pyclass(frozen, skip_from_py_object)]
struct Echo {
    run: sweep::EchoRun,
}

#[pymethods]
impl Echo {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.run.series.times.clone()
    }
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.run.series.values.clone()
    }
    #[getter]
    fn d(&self) -> Vec<f64> {
        self.run.d.clone()
    }
    #[getter]
    fn valid(&self) -> Vec<bool> {
        self.run.series.valid.clone()
    }
    #[getter]
    fn region(&self) -> &'static str {
        self.run.region.tag()
    }
    /// Validity horizon from the convergence check, if one was run.
    #[getter]
    fn t_star(&self) -> Option<f64> {
        self.run.report.map(|r| r.t_star)
    }
    /// Analytic `L` on the same grid (finite engine only).
    #[getter]
    fn analytic(&self) -> Option<Vec<f64>> {
        self.run.overlay.as_ref().map(|(s, _)| s.values.clone())
    }

    fn extract(&self) -> PyResult<Observables> {
        extract::extract_observables(&self.run.series)
            .map(Observables::from)
            .map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        self.run.to_csv().map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.run.series.len()
    }
}

fn parse_engine(engine: &str) -> PyResult<Engine> {
    engine.parse().map_err(to_py)
}

/// Classifies `(g1, g2)` and returns `(tag, Ω1, Ω2, (kind1, kind2))`.
#[pyfunction]
#[pyo3(signature = (g1, g2, omega = 1.0))]
fn classify(g1: f64, g2: f64, omega: f64) -> PyResult<(&'static str, f64, f64, (&'static str, &'static str))> {
    let params = model::ModelParams::resonant(omega, g1, g2, 1).map_err(to_py)?;
    let region = model::classify_phase(&params).map_err(to_py)?;
    if let Some(line) = region.boundary_detail() {
        return Err(to_py(Error::OnBoundary(line)));
    }
    let (o1, o2) = model::effective_frequencies(&params).map_err(to_py)?;
    let (k1, k2) = region_kinds(region).expect("regions off the boundary have kinds");
    Ok((region.tag(), o1, o2, (k1.label(), k2.label())))
}

/// `(g1, g2)` of a preset point a–d.
#[pyfunction]
fn preset(name: &str) -> PyResult<(f64, f64)> {
    sweep::preset(name)
        .ok_or_else(|| InvalidParamsError::new_err(format!("unknown preset {name:?}")))
}

/// Runs one quench. Couplings are in units of ω.
#[pyfunction]
#[pyo3(signature = (g1, g2, engine = "analytic", horizon = 20.0, dt = 0.01, n_atoms = None, n_max = None, convergence_check = false, spin = "down"))]
#[allow(clippy::too_many_arguments)]
fn run_echo(
    py: Python<'_>,
    g1: f64,
    g2: f64,
    engine: &str,
    horizon: f64,
    dt: f64,
    n_atoms: Option<usize>,
    n_max: Option<usize>,
    convergence_check: bool,
    spin: &str,
) -> PyResult<Echo> {
    let mut request = PointRequest::new(g1, g2, parse_engine(engine)?);
    request.horizon = horizon;
    request.dt = dt;
    request.n_atoms = n_atoms;
    request.n_max = n_max;
    request.convergence_check = convergence_check;
    request.spin = match spin {
        "down" => InitialSpin::Down,
        "up" => InitialSpin::Up,
        other => {
            return Err(InvalidParamsError::new_err(format!(
                "spin must be \"down\" or \"up\" (got {other:?})"
            )))
        }
    };
    let run = py.detach(|| sweep::run_echo(&request)).map_err(to_py)?;
    Ok(Echo { run })
}

/// Extracts λ and f from an echo CSV string.
#[pyfunction]
fn extract_csv(text: &str) -> PyResult<Observables> {
    let file = dicke_phase_lab::io::EchoFile::parse(text).map_err(to_py)?;
    extract::extract_observables(&file.series)
        .map(Observables::from)
        .map_err(to_py)
}

/// Runs a sweep described by a TOML config and returns the CSV text.
#[pyfunction]
fn sweep_csv(py: Python<'_>, config: &str) -> PyResult<String> {
    let config = SweepConfig::from_toml(config).map_err(to_py)?;
    py.detach(|| sweep::run_sweep(&config)?.to_csv())
        .map_err(to_py)
}

#[pymodule]
fn dicke_phase_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("DickeError", py.get_type::<DickeError>())?;
    m.add("InvalidParamsError", py.get_type::<InvalidParamsError>())?;
    m.add("BoundaryError", py.get_type::<BoundaryError>())?;
    m.add("NumericError", py.get_type::<NumericError>())?;
    m.add("FORMAT_HEADER", dicke_phase_lab::io::FORMAT_HEADER)?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<Observables>()?;
    m.add_class::<Echo>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_echo, m)?)?;
    m.add_function(wrap_pyfunction!(extract_csv, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}

//! Single-point runs and grid sweeps over the `(g1/ω, g2/ω)` plane.
//!
//! Couplings are given in units of ω and every run is carried out with
//! `ω = ω0 = 1`, so times come out in units of 1/ω and rates in units of ω.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::{
    analytic_observables, analytic_series, log_derivative, EchoSeries, QuenchObservables, TimeGrid,
};
use crate::error::{Error, Result};
use crate::extract::extract;
use crate::io::{format_option, format_value, render, write_atomic, EchoFile};
use crate::model::{classify_phase, ModelParams, PhaseRegion};
use crate::sim::{
    convergence_run, run_quench, BasisSpec, ConvergenceReport, ConvergenceTolerance, InitialSpin,
    RunDiagnostics, DEFAULT_TOLERANCE,
};

/// The representative points a–d, one per region.
pub const PRESETS: [(&str, f64, f64); 4] = [
    ("a", 0.4, 0.4),
    ("b", 1.6, 0.4),
    ("c", 1.2, 0.8),
    ("d", 0.4, 1.6),
];

/// `(g1/ω, g2/ω)` of a named preset.
pub fn preset(name: &str) -> Option<(f64, f64)> {
    PRESETS
        .iter()
        .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, g1, g2)| (g1, g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Closed-form observables and echoes.
    #[default]
    Analytic,
    /// Truncated two-mode model.
    Effective,
    /// Full model with `n_atoms` atoms.
    Finite,
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Effective => "effective",
            Engine::Finite => "finite",
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "effective" => Ok(Engine::Effective),
            "finite" => Ok(Engine::Finite),
            other => Err(Error::InvalidParams(format!(
                "unknown engine {other:?} (expected analytic, effective or finite)"
            ))),
        }
    }
}

/// Everything needed to evaluate one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRequest {
    /// `g1/ω`.
    pub g1: f64,
    /// `g2/ω`.
    pub g2: f64,
    pub engine: Engine,
    pub n_atoms: Option<usize>,
    pub n_max: Option<usize>,
    /// In units of 1/ω.
    pub horizon: f64,
    pub dt: f64,
    /// Bound the validity window by doubling `n_max` (and `N`).
    pub convergence_check: bool,
    pub spin: InitialSpin,
    pub tol: f64,
}

impl PointRequest {
    pub fn new(g1: f64, g2: f64, engine: Engine) -> Self {
        Self {
            g1,
            g2,
            engine,
            n_atoms: None,
            n_max: None,
            horizon: 20.0,
            dt: 0.01,
            convergence_check: false,
            spin: InitialSpin::Down,
            tol: DEFAULT_TOLERANCE,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::resonant(1.0, self.g1, self.g2, self.n_atoms.unwrap_or(1))
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.dt)
    }

    fn basis(&self) -> Result<Option<BasisSpec>> {
        let n_max = || {
            self.n_max.ok_or_else(|| {
                Error::InvalidParams(format!("engine {} requires n_max", self.engine.label()))
            })
        };
        Ok(match self.engine {
            Engine::Analytic => None,
            Engine::Effective => Some(BasisSpec::two_mode(n_max()?)?),
            Engine::Finite => {
                let n_atoms = self.n_atoms.ok_or_else(|| {
                    Error::InvalidParams("engine finite requires n_atoms".into())
                })?;
                Some(BasisSpec::spin_boson(n_atoms, n_max()?)?)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.grid()?;
        self.basis()?;
        if self.spin == InitialSpin::Up && self.engine != Engine::Finite {
            return Err(Error::InvalidParams(
                "the |⇑⟩ initial state needs the finite engine".into(),
            ));
        }
        Ok(())
    }
}

/// Echo of one point, with `D(t)` and, for the finite engine, the analytic
/// overlay on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoRun {
    pub request: PointRequest,
    pub region: PhaseRegion,
    pub series: EchoSeries,
    pub d: Vec<f64>,
    pub overlay: Option<(EchoSeries, Vec<f64>)>,
    pub report: Option<ConvergenceReport>,
    pub diagnostics: Option<RunDiagnostics>,
}

pub fn run_echo(request: &PointRequest) -> Result<EchoRun> {
    request.validate()?;
    let params = request.params()?;
    let region = classify_phase(&params)?;
    if let PhaseRegion::Boundary(line) = region {
        return Err(Error::OnBoundary(line));
    }
    let grid = request.grid()?;
    let (series, report, diagnostics) = match request.basis()? {
        None => (analytic_series(&params, &grid)?, None, None),
        Some(spec) if request.convergence_check => {
            let (run, report) = convergence_run(
                &params,
                &spec,
                request.spin,
                &grid,
                request.tol,
                &ConvergenceTolerance::default(),
            )?;
            (run.series, Some(report), Some(run.diagnostics))
        }
        Some(spec) => {
            let run = run_quench(&params, &spec, request.spin, &grid, request.tol)?;
            (run.series, None, Some(run.diagnostics))
        }
    };
    let d = log_derivative(&series)?;
    let overlay = match request.engine {
        Engine::Finite => {
            let analytic = analytic_series(&params, &grid)?;
            let d = log_derivative(&analytic)?;
            Some((analytic, d))
        }
        _ => None,
    };
    Ok(EchoRun {
        request: *request,
        region,
        series,
        d,
        overlay,
        report,
        diagnostics,
    })
}

impl EchoRun {
    pub fn to_file(&self) -> EchoFile {
        let r = &self.request;
        let mut metadata = BTreeMap::new();
        metadata.insert("engine".to_string(), r.engine.label().to_string());
        metadata.insert("g1".to_string(), format!("{}", r.g1));
        metadata.insert("g2".to_string(), format!("{}", r.g2));
        metadata.insert("region".to_string(), self.region.tag().to_string());
        if let Some(n) = r.n_atoms.filter(|_| r.engine == Engine::Finite) {
            metadata.insert("n_atoms".to_string(), n.to_string());
        }
        if let Some(n) = r.n_max.filter(|_| r.engine != Engine::Analytic) {
            metadata.insert("n_max".to_string(), n.to_string());
        }
        if r.engine == Engine::Finite {
            let spin = match r.spin {
                InitialSpin::Down => "down",
                InitialSpin::Up => "up",
            };
            metadata.insert("spin".to_string(), spin.to_string());
        }
        if let Some(report) = &self.report {
            metadata.insert("t_star".to_string(), format!("{}", report.t_star));
        }
        EchoFile {
            metadata,
            series: self.series.clone(),
            d: self.d.clone(),
            overlay: self
                .overlay
                .as_ref()
                .map(|(s, d)| (s.values.clone(), d.clone())),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        self.to_file().to_csv()
    }
}

/// Result of one grid point; failures are recorded, never raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub g1: f64,
    pub g2: f64,
    /// Region tag, or empty when the point could not be classified.
    pub region: String,
    pub observables: Option<QuenchObservables>,
    pub t_star: Option<f64>,
    pub engine: Engine,
    /// `ok`, `boundary`, or the kind of the error that stopped the point.
    pub status: String,
}

pub fn evaluate_point(request: &PointRequest) -> PointOutcome {
    let mut out = PointOutcome {
        g1: request.g1,
        g2: request.g2,
        region: String::new(),
        observables: None,
        t_star: None,
        engine: request.engine,
        status: "ok".to_string(),
    };
    let region = match request.params().and_then(|p| classify_phase(&p)) {
        Ok(r) => r,
        Err(e) => {
            out.status = e.kind().to_string();
            return out;
        }
    };
    out.region = region.tag().to_string();
    if region.is_boundary() {
        out.status = "boundary".to_string();
        return out;
    }
    let result = match request.engine {
        Engine::Analytic => request
            .params()
            .and_then(|p| analytic_observables(&p))
            .map(|o| (o, None)),
        _ => run_echo(request).and_then(|run| {
            let t_star = run
                .report
                .map(|r| r.t_star)
                .or_else(|| run.series.validity_horizon());
            extract(&run.series).map(|e| (e.observables, t_star))
        }),
    };
    match result {
        Ok((obs, t_star)) => {
            out.observables = Some(obs);
            out.t_star = t_star;
        }
        Err(e) => out.status = e.kind().to_string(),
    }
    out
}

fn default_omega() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    20.0
}
fn default_dt() -> f64 {
    0.01
}
fn default_workers() -> usize {
    1
}
fn is_false(b: &bool) -> bool {
    !*b
}

/// Sweep parameters, read from TOML. Unknown keys are rejected.
///
/// ```toml
/// g1_min = 0.0
/// g1_max = 2.0
/// g1_step = 0.0125
/// g2_min = 0.0
/// g2_max = 2.0
/// g2_step = 0.0125
/// engine = "analytic"   # analytic | effective | finite
/// workers = 4
/// output = "sweep.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub g1_min: f64,
    pub g1_max: f64,
    pub g1_step: f64,
    pub g2_min: f64,
    pub g2_max: f64,
    pub g2_step: f64,
    /// Energy unit. The grid is already in units of ω, so this only has to
    /// be positive.
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_atoms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub convergence_check: bool,
}

/// Number of points in `[min, max]` with spacing `step`, accepting `max`
/// when it is within a millionth of a step of the grid.
fn axis(name: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) {
        return Err(Error::Config(format!("{name} range must be finite")));
    }
    if step <= 0.0 {
        return Err(Error::Config(format!("{name}_step must be positive (got {step})")));
    }
    if min < 0.0 || max < min {
        return Err(Error::Config(format!(
            "{name} range must satisfy 0 <= min <= max (got {min}..{max})"
        )));
    }
    let count = ((max - min) / step + 1e-6).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.g1_values()?;
        self.g2_values()?;
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Config(format!("omega must be positive (got {})", self.omega)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match self.engine {
            Engine::Finite if self.n_atoms.is_none() || self.n_max.is_none() => {
                return Err(Error::Config("engine = \"finite\" requires n_atoms and n_max".into()))
            }
            Engine::Effective if self.n_max.is_none() => {
                return Err(Error::Config("engine = \"effective\" requires n_max".into()))
            }
            _ => {}
        }
        if self.n_atoms == Some(0) {
            return Err(Error::Config("n_atoms must be at least 1".into()));
        }
        if self.n_max == Some(0) {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        TimeGrid::new(self.horizon, self.dt).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn g1_values(&self) -> Result<Vec<f64>> {
        axis("g1", self.g1_min, self.g1_max, self.g1_step)
    }

    pub fn g2_values(&self) -> Result<Vec<f64>> {
        axis("g2", self.g2_min, self.g2_max, self.g2_step)
    }

    /// Requests in row-major order: `g1` outer, `g2` inner.
    pub fn requests(&self) -> Result<Vec<PointRequest>> {
        let g2s = self.g2_values()?;
        Ok(self
            .g1_values()?
            .into_iter()
            .flat_map(|g1| {
                g2s.iter().map(move |&g2| PointRequest {
                    g1,
                    g2,
                    engine: self.engine,
                    n_atoms: self.n_atoms,
                    n_max: self.n_max,
                    horizon: self.horizon,
                    dt: self.dt,
                    convergence_check: self.convergence_check,
                    spin: InitialSpin::Down,
                    tol: DEFAULT_TOLERANCE,
                })
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<PointOutcome>,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "g1", "g2", "region", "lambda", "f", "f1", "f2", "t_star", "engine", "status",
];

impl SweepResult {
    pub fn to_csv(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| {
            let o = r.observables;
            vec![
                format!("{:.6}", r.g1),
                format!("{:.6}", r.g2),
                r.region.clone(),
                o.map(|o| format_value(o.lambda)).unwrap_or_default(),
                o.map(|o| format_value(o.f)).unwrap_or_default(),
                format_option(o.and_then(|o| o.f1)),
                format_option(o.and_then(|o| o.f2)),
                format_option(r.t_star),
                r.engine.label().to_string(),
                r.status.clone(),
            ]
        });
        render(&BTreeMap::new(), &SWEEP_COLUMNS, rows)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }
}

/// Evaluates every grid point on `config.workers` threads. Rows come back in
/// grid order whatever the worker count.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let requests = config.requests()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows = pool.install(|| requests.par_iter().map(evaluate_point).collect());
    Ok(SweepResult { rows })
}

//! Closed-form Loschmidt echoes of the vacuum in the thermodynamic limit.
//!
//! Starting from `|0⟩_a |0⟩_b = |0⟩_d1 |0⟩_d2`, the echo factorizes into one
//! factor per decoupled mode:
//!
//! ```text
//! HO / AHO:  L_j(t) = 1 - 8 tanh²θ / (2 + tanh²θ)² · sin²(Ω t)
//! IHO:       L_j(t) = 1 / cosh(Ω t)
//! ```
//!
//! The oscillating factor has period `π/Ω`, so each stable mode contributes
//! a frequency `Ω/π`; each unstable mode contributes a decay rate `Ω`.

use serde::{Deserialize, Serialize};

use crate::bogoliubov::NormalForm;
use crate::error::{Error, Result};
use crate::model::{
    classify_phase, effective_frequencies, region_hamiltonians, EquivalentHamiltonian, ModelParams,
    OscillatorKind, PhaseRegion,
};

/// Echo samples at or below this value are treated as underflowed.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Analytic,
    EffectiveOracle,
    FiniteN,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::EffectiveOracle => "effective",
            Provenance::FiniteN => "finite",
        }
    }
}

/// Uniform grid `t_k = k·dt`, `k = 0..=steps`, in units of 1/ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive (got {dt})")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon must be non-negative (got {horizon})"
            )));
        }
        let steps = (horizon / dt).round() as usize;
        Ok(Self { dt, steps })
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EchoSeries {
    pub dt: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-sample validity; the usable window is the valid prefix.
    pub valid: Vec<bool>,
    pub provenance: Provenance,
}

impl EchoSeries {
    /// Builds a series on `grid`, marking samples at or below the underflow
    /// floor (and non-finite samples) invalid.
    pub fn from_values(grid: &TimeGrid, values: Vec<f64>, provenance: Provenance) -> Self {
        assert_eq!(values.len(), grid.len(), "one value per grid point");
        let valid = values
            .iter()
            .map(|v| v.is_finite() && *v > UNDERFLOW_FLOOR)
            .collect();
        Self {
            dt: grid.dt,
            times: grid.times(),
            values,
            valid,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of leading valid samples.
    pub fn valid_len(&self) -> usize {
        self.valid.iter().take_while(|v| **v).count()
    }

    /// Last time of the valid prefix, or `None` when the first sample is invalid.
    pub fn validity_horizon(&self) -> Option<f64> {
        match self.valid_len() {
            0 => None,
            n => Some(self.times[n - 1]),
        }
    }

    /// Marks every sample after `horizon` invalid.
    pub fn restrict_validity(&mut self, horizon: f64) {
        let cut = horizon + 1e-9 * self.dt;
        for (t, v) in self.times.iter().zip(self.valid.iter_mut()) {
            if *t > cut {
                *v = false;
            }
        }
    }
}

/// Amplitude `a` of a stable-mode echo `1 - a sin²(Ω t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EchoAmplitude {
    /// `8 tanh²θ / (2 + tanh²θ)²`, from the pair-state expansion of the vacuum.
    PairExpansion,
    /// `2A²` with `A = 2 / (1 + 2 tanh⁻²θ)`; kept for comparison only, it is
    /// quartic in `tanh θ` and misses the leading-order amplitude.
    CoefficientForm,
}

impl EchoAmplitude {
    pub fn amplitude(&self, tanh_theta: f64) -> f64 {
        let t2 = tanh_theta * tanh_theta;
        match self {
            EchoAmplitude::PairExpansion => 8.0 * t2 / ((2.0 + t2) * (2.0 + t2)),
            EchoAmplitude::CoefficientForm => {
                let a = 2.0 * t2 / (t2 + 2.0);
                2.0 * a * a
            }
        }
    }
}

/// Anything that describes one decoupled mode's normal form.
pub trait ModeDynamics {
    fn kind(&self) -> OscillatorKind;
    fn omega_eff(&self) -> f64;
    fn tanh_theta(&self) -> f64;
}

impl ModeDynamics for EquivalentHamiltonian {
    fn kind(&self) -> OscillatorKind {
        self.kind
    }
    fn omega_eff(&self) -> f64 {
        self.omega_eff
    }
    fn tanh_theta(&self) -> f64 {
        self.tanh_theta_normal
    }
}

impl ModeDynamics for NormalForm {
    fn kind(&self) -> OscillatorKind {
        self.kind
    }
    fn omega_eff(&self) -> f64 {
        self.omega_eff
    }
    fn tanh_theta(&self) -> f64 {
        self.tanh_theta
    }
}

pub fn mode_echo<M: ModeDynamics>(mode: &M, t: f64) -> Result<f64> {
    mode_echo_with(mode, t, EchoAmplitude::PairExpansion)
}

pub fn mode_echo_with<M: ModeDynamics>(mode: &M, t: f64, amplitude: EchoAmplitude) -> Result<f64> {
    let omega = mode.omega_eff();
    if omega <= 0.0 {
        return Err(Error::DegenerateForm(
            "mode frequency vanishes on an exceptional line".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("time must be non-negative (got {t})")));
    }
    Ok(match mode.kind() {
        OscillatorKind::Harmonic | OscillatorKind::AntiHarmonic => {
            let s = (omega * t).sin();
            1.0 - amplitude.amplitude(mode.tanh_theta()) * s * s
        }
        OscillatorKind::InvertedHarmonic => sech(omega * t),
    })
}

/// `1/cosh(x)` without overflow.
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

pub fn full_echo(params: &ModelParams, t: f64) -> Result<f64> {
    let (h1, h2) = region_hamiltonians(params)?;
    Ok(mode_echo(&h1, t)? * mode_echo(&h2, t)?)
}

pub fn full_echo_with(params: &ModelParams, t: f64, amplitude: EchoAmplitude) -> Result<f64> {
    let (h1, h2) = region_hamiltonians(params)?;
    Ok(mode_echo_with(&h1, t, amplitude)? * mode_echo_with(&h2, t, amplitude)?)
}

pub fn analytic_series(params: &ModelParams, grid: &TimeGrid) -> Result<EchoSeries> {
    let (h1, h2) = region_hamiltonians(params)?;
    let values = (0..grid.len())
        .map(|k| {
            let t = grid.time(k);
            Ok(mode_echo(&h1, t)? * mode_echo(&h2, t)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EchoSeries::from_values(grid, values, Provenance::Analytic))
}

/// `D(t) = d ln L / dt` by central differences on the valid prefix
/// (one-sided at its ends). Samples outside the prefix are NaN.
pub fn log_derivative(series: &EchoSeries) -> Result<Vec<f64>> {
    let n = series.valid_len();
    let mut out = vec![f64::NAN; series.len()];
    let mut logs = Vec::with_capacity(n);
    for (index, &value) in series.values[..n].iter().enumerate() {
        if value <= UNDERFLOW_FLOOR || !value.is_finite() {
            return Err(Error::NonPositiveEcho { index, value });
        }
        logs.push(value.ln());
    }
    if n < 2 {
        return Ok(out);
    }
    let dt = series.dt;
    out[0] = (logs[1] - logs[0]) / dt;
    out[n - 1] = (logs[n - 1] - logs[n - 2]) / dt;
    for k in 1..n - 1 {
        out[k] = (logs[k + 1] - logs[k - 1]) / (2.0 * dt);
    }
    Ok(out)
}

/// Decay rate and oscillation content of a quench, in units of ω.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuenchObservables {
    /// Decay rate (≤ 0); zero when no mode is unstable.
    pub lambda: f64,
    /// Sum of the oscillation frequencies (≥ 0).
    pub f: f64,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    /// Level around which `D(t)` oscillates when one mode is stable and one is not.
    pub balance: Option<f64>,
}

pub fn analytic_observables(params: &ModelParams) -> Result<QuenchObservables> {
    let region = classify_phase(params)?;
    if let PhaseRegion::Boundary(line) = region {
        return Err(Error::OnBoundary(line));
    }
    let (w1, w2) = effective_frequencies(params)?;
    let scale = params.omega;
    let pi = std::f64::consts::PI;
    let f1 = w1 / (pi * scale);
    let f2 = w2 / (pi * scale);
    Ok(match region {
        PhaseRegion::Normal | PhaseRegion::Superradiant1 => QuenchObservables {
            lambda: 0.0,
            f: f1 + f2,
            f1: Some(f1),
            f2: Some(f2),
            balance: None,
        },
        PhaseRegion::Superradiant2 => QuenchObservables {
            lambda: -w2 / scale,
            f: f1,
            f1: Some(f1),
            f2: None,
            balance: Some(-w2 / scale),
        },
        PhaseRegion::Superradiant3 => QuenchObservables {
            lambda: -(w1 + w2) / scale,
            f: 0.0,
            f1: None,
            f2: None,
            balance: None,
        },
        PhaseRegion::Boundary(_) => unreachable!("screened above"),
    })
}

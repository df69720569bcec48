//! Bogoliubov normal form of `𝓗 = μ β†β + (Δ/2)(β†β† + ββ)`.
//!
//! With `γ = sinh θ β† + cosh θ β`:
//!
//! * `|μ| > |Δ|`: `𝓗 = sgn(μ) √(μ² - Δ²) (γ†γ + ½) - μ/2`, an ordinary (HO) or
//!   upside-down (AHO) ladder.
//! * `|μ| < |Δ|`: `𝓗 = sgn(Δ) ½ √(Δ² - μ²) (γ†γ† + γγ) - μ/2`, the inverted
//!   oscillator (IHO) with a continuous, unbounded spectrum.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OscillatorKind;

/// Relative degeneracy tolerance used by [`diagonalize`].
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub mu: f64,
    pub delta: f64,
}

impl QuadraticForm {
    pub fn new(mu: f64, delta: f64) -> Result<Self> {
        if !(mu.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "quadratic form coefficients must be finite (mu = {mu}, delta = {delta})"
            )));
        }
        Ok(Self { mu, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub kind: OscillatorKind,
    pub omega_eff: f64,
    /// `sgn(μ)` for HO/AHO, `sgn(Δ)` for IHO.
    pub sign: f64,
    pub tanh_theta: f64,
    pub offset: f64,
}

impl NormalForm {
    /// `θ = artanh(tanh θ)`.
    pub fn theta(&self) -> f64 {
        self.tanh_theta.atanh()
    }

    /// Level `n` of the HO/AHO ladder, `offset + sign·Ω(n + ½)`. `None` for IHO.
    pub fn level(&self, n: usize) -> Option<f64> {
        match self.kind {
            OscillatorKind::InvertedHarmonic => None,
            _ => Some(self.offset + self.sign * self.omega_eff * (n as f64 + 0.5)),
        }
    }
}

/// Diagonalizes with degeneracy tolerance `1e-9 · max(|μ|, |Δ|)`.
pub fn diagonalize(q: &QuadraticForm) -> Result<NormalForm> {
    let scale = q.mu.abs().max(q.delta.abs());
    diagonalize_with_tolerance(q, DEGENERACY_TOLERANCE * scale)
}

/// Diagonalizes, reporting `DegenerateForm` when `||μ| - |Δ|| ≤ tol`.
pub fn diagonalize_with_tolerance(q: &QuadraticForm, tol: f64) -> Result<NormalForm> {
    let QuadraticForm { mu, delta } = *q;
    let (am, ad) = (mu.abs(), delta.abs());
    if (am - ad).abs() <= tol {
        return Err(Error::DegenerateForm(format!(
            "|mu| == |delta| (mu = {mu}, delta = {delta})"
        )));
    }
    let offset = -0.5 * mu;

    if am > ad {
        let omega_eff = ((am - ad) * (am + ad)).sqrt();
        let sign = mu.signum();
        // (μ - sgn μ Ω)/Δ == Δ/(μ + sgn μ Ω); the latter has no cancellation
        // and is exactly 0 at Δ = 0.
        let tanh_theta = delta / (mu + sign * omega_eff);
        let kind = if mu > 0.0 {
            OscillatorKind::Harmonic
        } else {
            OscillatorKind::AntiHarmonic
        };
        Ok(NormalForm {
            kind,
            omega_eff,
            sign,
            tanh_theta,
            offset,
        })
    } else {
        let omega_eff = ((ad - am) * (ad + am)).sqrt();
        let sign = delta.signum();
        // (Δ - sgn Δ Ω)/μ == μ/(Δ + sgn Δ Ω)
        let tanh_theta = mu / (delta + sign * omega_eff);
        Ok(NormalForm {
            kind: OscillatorKind::InvertedHarmonic,
            omega_eff,
            sign,
            tanh_theta,
            offset,
        })
    }
}

/// Sorted eigenvalues of `𝓗` truncated to Fock states `0..=cutoff`.
pub fn matrix_oracle(q: &QuadraticForm, cutoff: usize) -> Result<Vec<f64>> {
    if cutoff < 8 {
        return Err(Error::InvalidParams(format!(
            "oracle cutoff must be at least 8 (got {cutoff})"
        )));
    }
    let dim = cutoff + 1;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = q.mu * n as f64;
        if n + 2 < dim {
            let v = 0.5 * q.delta * (((n + 1) * (n + 2)) as f64).sqrt();
            m[(n + 2, n)] = v;
            m[(n, n + 2)] = v;
        }
    }
    let mut eig = SymmetricEigen::new(m).eigenvalues.as_slice().to_vec();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

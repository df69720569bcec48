//! Model parameters, Nambu-space blocks and the phase classifier.
//!
//! In the thermodynamic limit the anisotropic Dicke model reduces to two
//! decoupled quadratic modes `d1 = (a + b)/√2` and `d2 = (a - b)/√2` with
//!
//! ```text
//! H1 = (ω + g1) d1†d1 + (g2/2)(d1†d1† + d1 d1)
//! H2 = (ω - g1) d2†d2 - (g2/2)(d2†d2† + d2 d2)
//! ```
//!
//! Each mode is represented by a 2×2 non-Hermitian Nambu block whose
//! exceptional points (`|ω + g1| = g2` and `|ω - g1| = g2`) partition the
//! first quadrant of the coupling plane into NP, SP1, SP2 and SP3.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bogoliubov::{self, QuadraticForm};
use crate::error::{Error, Result};

/// Distance (in units of ω) within which a point counts as lying on a
/// critical line.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Field frequency; sets the energy scale.
    pub omega: f64,
    /// Atomic transition frequency.
    pub omega0: f64,
    /// Rotating-wave coupling.
    pub g1: f64,
    /// Counter-rotating coupling.
    pub g2: f64,
    /// Number of two-level atoms.
    pub n_atoms: usize,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, g1: f64, g2: f64, n_atoms: usize) -> Result<Self> {
        let params = Self {
            omega,
            omega0,
            g1,
            g2,
            n_atoms,
        };
        params.validate()?;
        Ok(params)
    }

    /// Resonant model (`ω0 = ω`), the only case the analytic results cover.
    pub fn resonant(omega: f64, g1: f64, g2: f64, n_atoms: usize) -> Result<Self> {
        Self::new(omega, omega, g1, g2, n_atoms)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.omega0, self.g1, self.g2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega must be positive (got {})",
                self.omega
            )));
        }
        if self.g1 < 0.0 || self.g2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "couplings must be non-negative (got g1 = {}, g2 = {})",
                self.g1, self.g2
            )));
        }
        if self.n_atoms == 0 {
            return Err(Error::InvalidParams("n_atoms must be at least 1".into()));
        }
        Ok(())
    }

    /// Validates and additionally requires `ω0 == ω`.
    pub fn require_resonant(&self) -> Result<()> {
        self.validate()?;
        if self.omega0 != self.omega {
            return Err(Error::UnsupportedParams {
                omega: self.omega,
                omega0: self.omega0,
            });
        }
        Ok(())
    }

    /// Couplings in units of ω.
    pub fn scaled_couplings(&self) -> (f64, f64) {
        (self.g1 / self.omega, self.g2 / self.omega)
    }
}

/// Critical line of the coupling plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryLine {
    /// `g1 + g2 = ω`: the NP/SP transition, coinciding with the h2 EP for `g1 < ω`.
    NormalSuperradiant,
    /// `g2 = g1 - ω`: h2 EP separating SP1 from SP2.
    LowerExceptional,
    /// `g2 = g1 + ω`: h1 EP separating SP2 from SP3.
    UpperExceptional,
}

impl fmt::Display for BoundaryLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryLine::NormalSuperradiant => "g1+g2=omega",
            BoundaryLine::LowerExceptional => "g2=g1-omega",
            BoundaryLine::UpperExceptional => "g2=g1+omega",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseRegion {
    Normal,
    Superradiant1,
    Superradiant2,
    Superradiant3,
    Boundary(BoundaryLine),
}

impl PhaseRegion {
    pub fn tag(&self) -> &'static str {
        match self {
            PhaseRegion::Normal => "NP",
            PhaseRegion::Superradiant1 => "SP1",
            PhaseRegion::Superradiant2 => "SP2",
            PhaseRegion::Superradiant3 => "SP3",
            PhaseRegion::Boundary(_) => "Boundary",
        }
    }

    pub fn boundary_detail(&self) -> Option<BoundaryLine> {
        match self {
            PhaseRegion::Boundary(line) => Some(*line),
            _ => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, PhaseRegion::Boundary(_))
    }

    /// Parses the short tag used in CSV output. Boundary tags carry no line.
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "NP" => Some(PhaseRegion::Normal),
            "SP1" => Some(PhaseRegion::Superradiant1),
            "SP2" => Some(PhaseRegion::Superradiant2),
            "SP3" => Some(PhaseRegion::Superradiant3),
            _ => None,
        }
    }
}

impl fmt::Display for PhaseRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseRegion::Boundary(line) => write!(f, "Boundary({line})"),
            other => f.write_str(other.tag()),
        }
    }
}

pub fn classify_phase(params: &ModelParams) -> Result<PhaseRegion> {
    params.require_resonant()?;
    let ModelParams { omega, g1, g2, .. } = *params;
    let eps = BOUNDARY_TOLERANCE * omega;

    let transition = g1 + g2 - omega;
    let lower = g2 - (g1 - omega);
    let upper = g2 - (g1 + omega);

    if transition.abs() <= eps {
        return Ok(PhaseRegion::Boundary(BoundaryLine::NormalSuperradiant));
    }
    if lower.abs() <= eps {
        return Ok(PhaseRegion::Boundary(BoundaryLine::LowerExceptional));
    }
    if upper.abs() <= eps {
        return Ok(PhaseRegion::Boundary(BoundaryLine::UpperExceptional));
    }

    Ok(if transition < 0.0 {
        PhaseRegion::Normal
    } else if lower < 0.0 {
        PhaseRegion::Superradiant1
    } else if upper < 0.0 {
        PhaseRegion::Superradiant2
    } else {
        PhaseRegion::Superradiant3
    })
}

/// One of the two 2×2 blocks `h = (μ/2) σz + (δ/2) iσy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NambuBlock {
    /// 1 for h1, 2 for h2.
    pub index: u8,
    pub mu: f64,
    pub delta: f64,
    /// `[λ+, λ-]`.
    pub eigenvalues: [Complex64; 2],
    /// Right eigenvectors matching `eigenvalues`, second component fixed to 1
    /// whenever `delta != 0`.
    pub eigenvectors: [[Complex64; 2]; 2],
}

impl NambuBlock {
    fn new(index: u8, mu: f64, delta: f64) -> Self {
        let half_root = 0.5 * signed_root(mu, delta);
        let eigenvalues = [half_root, -half_root];
        let eigenvectors = if delta == 0.0 {
            // λ+ = μ/2 on (1, 0) and λ- = -μ/2 on (0, 1)
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            [[one, zero], [zero, one]]
        } else {
            eigenvalues.map(|lam| [-(mu + 2.0 * lam) / delta, Complex64::new(1.0, 0.0)])
        };
        Self {
            index,
            mu,
            delta,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = |v: f64| Complex64::new(v, 0.0);
        [
            [c(0.5 * self.mu), c(0.5 * self.delta)],
            [c(-0.5 * self.delta), c(-0.5 * self.mu)],
        ]
    }

    pub fn eigenvalue_gap(&self) -> f64 {
        (self.eigenvalues[0] - self.eigenvalues[1]).norm()
    }

    /// `|⟨φ+, φ-⟩| / (‖φ+‖ ‖φ-‖)`; equals 1 at an exceptional point.
    pub fn eigenvector_alignment(&self) -> f64 {
        let [u, v] = &self.eigenvectors;
        let dot = u[0].conj() * v[0] + u[1].conj() * v[1];
        let nu = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        dot.norm() / (nu * nv)
    }

    /// Eigenvalues are real (oscillatory mode) rather than imaginary.
    pub fn is_real_spectrum(&self) -> bool {
        self.mu.abs() >= self.delta.abs()
    }
}

/// `√(μ² - δ²)` as a complex number: real when `|μ| ≥ |δ|`, positive imaginary otherwise.
fn signed_root(mu: f64, delta: f64) -> Complex64 {
    let arg = (mu.abs() - delta.abs()) * (mu.abs() + delta.abs());
    if arg >= 0.0 {
        Complex64::new(arg.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-arg).sqrt())
    }
}

pub fn nambu_blocks(params: &ModelParams) -> Result<(NambuBlock, NambuBlock)> {
    params.require_resonant()?;
    let ModelParams { omega, g1, g2, .. } = *params;
    Ok((
        NambuBlock::new(1, omega + g1, g2),
        NambuBlock::new(2, omega - g1, -g2),
    ))
}

/// `(Ω1, Ω2)`, the non-negative mode frequencies.
pub fn effective_frequencies(params: &ModelParams) -> Result<(f64, f64)> {
    params.require_resonant()?;
    let ModelParams { omega, g1, g2, .. } = *params;
    let freq = |mu: f64| {
        let arg = (mu.abs() - g2) * (mu.abs() + g2);
        arg.abs().sqrt()
    };
    Ok((freq(omega + g1), freq(omega - g1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OscillatorKind {
    Harmonic,
    InvertedHarmonic,
    AntiHarmonic,
}

impl OscillatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            OscillatorKind::Harmonic => "HO",
            OscillatorKind::InvertedHarmonic => "IHO",
            OscillatorKind::AntiHarmonic => "AHO",
        }
    }

    /// HO and AHO dynamics are bounded; IHO dynamics squeeze without bound.
    pub fn is_oscillatory(&self) -> bool {
        !matches!(self, OscillatorKind::InvertedHarmonic)
    }
}

impl fmt::Display for OscillatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Normal form of one decoupled mode in a given region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentHamiltonian {
    pub kind: OscillatorKind,
    pub omega_eff: f64,
    /// Region formula for the Bogoliubov parameter as quoted for each region.
    /// Complex in the unstable regions; `None` where the expression is
    /// singular (`g2 = 0` in SP1, `g1 = ω` in SP2).
    pub tanh_theta: Option<Complex64>,
    /// Real Bogoliubov parameter from the generic single-mode
    /// diagonalization, always of magnitude below one. This is the value the
    /// echo amplitudes use.
    pub tanh_theta_normal: f64,
    pub offset: f64,
}

/// Equivalent Hamiltonians `(H1, H2)` of the two decoupled modes.
pub fn region_hamiltonians(
    params: &ModelParams,
) -> Result<(EquivalentHamiltonian, EquivalentHamiltonian)> {
    let region = classify_phase(params)?;
    if let PhaseRegion::Boundary(line) = region {
        return Err(Error::OnBoundary(line));
    }
    let ModelParams { omega, g1, g2, .. } = *params;
    let (omega1, omega2) = effective_frequencies(params)?;

    let mu1 = omega + g1;
    let mu2 = omega - g1;
    // The classifier already screened the critical lines, so only exact
    // degeneracy can fail here.
    let form1 = bogoliubov::diagonalize_with_tolerance(&QuadraticForm::new(mu1, g2)?, 0.0)?;
    let form2 = bogoliubov::diagonalize_with_tolerance(&QuadraticForm::new(mu2, -g2)?, 0.0)?;

    let real = |v: f64| Some(Complex64::new(v, 0.0));
    // (μ - Ω)/g2 rewritten as g2/(μ + Ω) when μ > 0 to avoid cancellation.
    let stable_ratio = |mu: f64, big_omega: f64| {
        if mu > 0.0 {
            real(g2 / (mu + big_omega))
        } else if g2 == 0.0 {
            None
        } else {
            real((mu - big_omega) / g2)
        }
    };
    let complex_ratio = |mu: f64, imag: f64| {
        if mu == 0.0 {
            None
        } else {
            Some(Complex64::new(g2, imag) / mu)
        }
    };

    let (tanh1, tanh2) = match region {
        PhaseRegion::Normal | PhaseRegion::Superradiant1 => {
            (stable_ratio(mu1, omega1), stable_ratio(mu2, omega2))
        }
        PhaseRegion::Superradiant2 => (stable_ratio(mu1, omega1), complex_ratio(mu2, -omega2)),
        PhaseRegion::Superradiant3 => (complex_ratio(mu1, omega1), complex_ratio(mu2, -omega2)),
        PhaseRegion::Boundary(_) => unreachable!("screened above"),
    };

    let h1 = EquivalentHamiltonian {
        kind: form1.kind,
        omega_eff: omega1,
        tanh_theta: tanh1,
        tanh_theta_normal: form1.tanh_theta,
        offset: -0.5 * mu1,
    };
    let h2 = EquivalentHamiltonian {
        kind: form2.kind,
        omega_eff: omega2,
        tanh_theta: tanh2,
        tanh_theta_normal: form2.tanh_theta,
        offset: -0.5 * mu2,
    };
    Ok((h1, h2))
}

/// Expected `(H1, H2)` kinds per region.
pub fn region_kinds(region: PhaseRegion) -> Option<(OscillatorKind, OscillatorKind)> {
    use OscillatorKind::*;
    match region {
        PhaseRegion::Normal => Some((Harmonic, Harmonic)),
        PhaseRegion::Superradiant1 => Some((Harmonic, AntiHarmonic)),
        PhaseRegion::Superradiant2 => Some((Harmonic, InvertedHarmonic)),
        PhaseRegion::Superradiant3 => Some((InvertedHarmonic, InvertedHarmonic)),
        PhaseRegion::Boundary(_) => None,
    }
}

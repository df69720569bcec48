//! Quench runs: echo series, conservation diagnostics and truncation checks.

use serde::{Deserialize, Serialize};

use super::basis::{BasisKind, BasisSpec};
use super::hamiltonian::{build_adm, build_effective};
use num_complex::Complex64;

use super::propagate::{propagate_with, KrylovPropagator, StateVector, NORM_DRIFT_LIMIT};
use super::sparse::SparseHamiltonian;
use crate::echo::{EchoSeries, Provenance, TimeGrid, UNDERFLOW_FLOOR};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Atomic part of the initial product state; the boson modes start in vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum InitialSpin {
    /// `|⇓⟩`, all atoms in the ground state.
    #[default]
    Down,
    /// `|⇑⟩`, all atoms excited.
    Up,
}

pub fn initial_state(spec: &BasisSpec, spin: InitialSpin) -> Result<StateVector> {
    let index = match (spec.kind, spin) {
        (BasisKind::SpinBoson, InitialSpin::Down) => spec.index(0, 0),
        (BasisKind::SpinBoson, InitialSpin::Up) => spec.index(spec.n_atoms, 0),
        (BasisKind::TwoMode, InitialSpin::Down) => spec.index(0, 0),
        (BasisKind::TwoMode, InitialSpin::Up) => {
            return Err(Error::BasisMismatch(
                "the two-mode model only describes the |⇓⟩ quench".into(),
            ))
        }
    };
    Ok(StateVector::basis(spec.dimension(), index))
}

pub fn build_hamiltonian(params: &ModelParams, spec: &BasisSpec) -> Result<SparseHamiltonian> {
    match spec.kind {
        BasisKind::SpinBoson => build_adm(params, spec),
        BasisKind::TwoMode => build_effective(params, spec),
    }
}

fn provenance_of(spec: &BasisSpec) -> Provenance {
    match spec.kind {
        BasisKind::SpinBoson => Provenance::FiniteN,
        BasisKind::TwoMode => Provenance::EffectiveOracle,
    }
}

/// `L(t_k) = |⟨ψ(0)|ψ(t_k)⟩|²` along the grid.
pub fn echo_series(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    grid: &TimeGrid,
    tol: f64,
    provenance: Provenance,
) -> Result<EchoSeries> {
    let mut values = Vec::with_capacity(grid.len());
    let reference = psi0.amplitudes();
    propagate_with(h, psi0, grid, tol, |_, _, psi| {
        let overlap: Complex64 =
            reference.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        values.push(overlap.norm_sqr());
        Ok(())
    })?;
    Ok(EchoSeries::from_values(grid, values, provenance))
}

/// Worst-case conservation violations seen along a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// `max |‖ψ‖ - 1|`.
    pub max_norm_drift: f64,
    /// Largest weight in the parity sector opposite to the initial state's.
    pub max_parity_leakage: f64,
    /// `max |⟨N_exc⟩(t) - ⟨N_exc⟩(0)|` for the excitation number
    /// `a†a + J_z` (or `a†a + b†b`); conserved only when `g2 = 0`.
    pub max_excitation_drift: f64,
    pub matvecs: usize,
    pub max_krylov_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchRun {
    pub spec: BasisSpec,
    pub series: EchoSeries,
    pub diagnostics: RunDiagnostics,
}

/// One propagation with its echo and conservation diagnostics, advanced a
/// grid step at a time.
struct Tracker<'a> {
    spec: BasisSpec,
    propagator: KrylovPropagator<'a>,
    psi: Vec<Complex64>,
    index0: usize,
    parity0: usize,
    excitation0: f64,
    values: Vec<f64>,
    diag: RunDiagnostics,
}

impl<'a> Tracker<'a> {
    fn new(h: &'a SparseHamiltonian, spec: &BasisSpec, spin: InitialSpin, tol: f64) -> Result<Self> {
        if h.dimension() != spec.dimension() {
            return Err(Error::BasisMismatch(format!(
                "Hamiltonian dimension {} does not match basis dimension {}",
                h.dimension(),
                spec.dimension()
            )));
        }
        let psi0 = initial_state(spec, spin)?;
        let index0 = psi0
            .amplitudes()
            .iter()
            .position(|a| a.norm_sqr() > 0.0)
            .expect("basis state has a nonzero entry");
        let (outer0, n0) = spec.split(index0);
        let mut tracker = Self {
            spec: *spec,
            propagator: KrylovPropagator::new(h, tol)?,
            psi: psi0.into_amplitudes(),
            index0,
            parity0: (outer0 + n0) % 2,
            excitation0: (outer0 + n0) as f64,
            values: Vec::new(),
            diag: RunDiagnostics::default(),
        };
        tracker.record();
        Ok(tracker)
    }

    fn record(&mut self) {
        let mut norm2 = 0.0;
        let mut leak = 0.0;
        let mut excitation = 0.0;
        let stride = self.spec.boson_cutoff + 1;
        for (outer, block) in self.psi.chunks(stride).enumerate() {
            for (n, amp) in block.iter().enumerate() {
                let w = amp.norm_sqr();
                norm2 += w;
                if (outer + n) % 2 != self.parity0 {
                    leak += w;
                }
                excitation += w * (outer + n) as f64;
            }
        }
        self.values.push(self.psi[self.index0].norm_sqr());
        let d = &mut self.diag;
        d.max_norm_drift = d.max_norm_drift.max((norm2.sqrt() - 1.0).abs());
        d.max_parity_leakage = d.max_parity_leakage.max(leak);
        d.max_excitation_drift = d
            .max_excitation_drift
            .max((excitation / norm2 - self.excitation0).abs());
    }

    fn advance(&mut self, dt: f64, t: f64) -> Result<()> {
        self.propagator.step(&mut self.psi, dt)?;
        self.record();
        if self.diag.max_norm_drift > NORM_DRIFT_LIMIT {
            let norm = self.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            return Err(Error::NormDrift { norm, time: t });
        }
        Ok(())
    }

    fn latest(&self) -> f64 {
        *self.values.last().expect("the initial sample is always recorded")
    }

    fn finish(self, grid: &TimeGrid) -> QuenchRun {
        let stats = self.propagator.stats();
        let mut diag = self.diag;
        diag.matvecs = stats.matvecs;
        diag.max_krylov_dim = stats.max_dim;
        let mut values = self.values;
        // references stopped early are padded as invalid
        values.resize(grid.len(), f64::NAN);
        QuenchRun {
            spec: self.spec,
            series: EchoSeries::from_values(grid, values, provenance_of(&self.spec)),
            diagnostics: diag,
        }
    }
}

/// Builds the Hamiltonian for `spec`, evolves the initial product state and
/// records the echo together with conservation diagnostics.
pub fn run_quench(
    params: &ModelParams,
    spec: &BasisSpec,
    spin: InitialSpin,
    grid: &TimeGrid,
    tol: f64,
) -> Result<QuenchRun> {
    let h = build_hamiltonian(params, spec)?;
    let mut tracker = Tracker::new(&h, spec, spin, tol)?;
    for k in 1..grid.len() {
        tracker.advance(grid.dt, grid.time(k))?;
    }
    Ok(tracker.finish(grid))
}

/// Full-model quench from `|⇑⟩|0⟩`.
pub fn mirror_run(
    params: &ModelParams,
    spec: &BasisSpec,
    grid: &TimeGrid,
    tol: f64,
) -> Result<EchoSeries> {
    spec.require(BasisKind::SpinBoson)?;
    Ok(run_quench(params, spec, InitialSpin::Up, grid, tol)?.series)
}

/// Thresholds for deciding when two runs agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTolerance {
    /// Absolute sup-norm tolerance on `L` when doubling the boson cutoff.
    pub truncation_abs: f64,
    /// Tolerance on `|ln L_a - ln L_b|` when doubling the boson cutoff; keeps
    /// the check meaningful once `L` itself is far below `truncation_abs`.
    pub truncation_log: f64,
    /// Tolerance on `|ln L_N - ln L_2N|` for the atom-number comparison.
    pub finite_size_log: f64,
}

impl Default for ConvergenceTolerance {
    fn default() -> Self {
        Self {
            truncation_abs: 1e-6,
            truncation_log: 1e-3,
            finite_size_log: 5e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Validity horizon: the smaller of the two horizons below.
    pub t_star: f64,
    /// Horizon over which doubling `n_max` leaves `L` unchanged.
    pub truncation_horizon: f64,
    /// Horizon over which doubling `N` leaves `L` unchanged (full model only).
    pub finite_size_horizon: Option<f64>,
    /// End of the grid; `t_star == grid_end` means no divergence was seen.
    pub grid_end: f64,
}

/// Last time up to which `a` and `b` agree at every sample, or 0 when they
/// already differ at `t = 0` (or either is invalid there).
pub fn agreement_horizon(a: &EchoSeries, b: &EchoSeries, abs_tol: f64, log_tol: f64) -> f64 {
    let n = a.valid_len().min(b.valid_len());
    let mut horizon = None;
    for k in 0..n {
        if !agree(a.values[k], b.values[k], abs_tol, log_tol) {
            break;
        }
        horizon = Some(a.times[k]);
    }
    horizon.unwrap_or(0.0)
}

/// Whether two echo samples agree to the given tolerances.
fn agree(x: f64, y: f64, abs_tol: f64, log_tol: f64) -> bool {
    x > UNDERFLOW_FLOOR
        && y > UNDERFLOW_FLOOR
        && (x - y).abs() < abs_tol
        && (x.ln() - y.ln()).abs() < log_tol
}

/// A reference run compared against the primary one sample at a time; it
/// stops propagating at the first disagreement.
struct Reference<'a> {
    tracker: Tracker<'a>,
    abs_tol: f64,
    log_tol: f64,
    horizon: Option<f64>,
    diverged: bool,
}

impl<'a> Reference<'a> {
    fn check(&mut self, primary: f64, t: f64) {
        if agree(primary, self.tracker.latest(), self.abs_tol, self.log_tol) {
            self.horizon = Some(t);
        } else {
            self.diverged = true;
        }
    }

    fn advance(&mut self, primary: f64, dt: f64, t: f64) -> Result<()> {
        if !self.diverged {
            self.tracker.advance(dt, t)?;
            self.check(primary, t);
        }
        Ok(())
    }
}

/// Runs the quench at `spec` and the reference runs needed to bound its
/// validity window. The primary run is returned with its validity flags
/// restricted to `[0, T*]`. Reference runs are stepped alongside the primary
/// one and dropped once they disagree with it.
pub fn convergence_run(
    params: &ModelParams,
    spec: &BasisSpec,
    spin: InitialSpin,
    grid: &TimeGrid,
    tol: f64,
    tolerance: &ConvergenceTolerance,
) -> Result<(QuenchRun, ConvergenceReport)> {
    let h = build_hamiltonian(params, spec)?;
    let doubled_spec = spec.with_cutoff(2 * spec.boson_cutoff)?;
    let h_doubled = build_hamiltonian(params, &doubled_spec)?;
    let larger = match spec.kind {
        BasisKind::SpinBoson => {
            let mut p = *params;
            p.n_atoms = 2 * params.n_atoms;
            let big_spec = spec.with_atoms(2 * spec.n_atoms)?;
            Some((big_spec, build_hamiltonian(&p, &big_spec)?))
        }
        BasisKind::TwoMode => None,
    };

    let mut primary = Tracker::new(&h, spec, spin, tol)?;
    let reference = |h, spec: &BasisSpec, abs_tol, log_tol| -> Result<Reference<'_>> {
        Ok(Reference {
            tracker: Tracker::new(h, spec, spin, tol)?,
            abs_tol,
            log_tol,
            horizon: None,
            diverged: false,
        })
    };
    let mut truncation = reference(
        &h_doubled,
        &doubled_spec,
        tolerance.truncation_abs,
        tolerance.truncation_log,
    )?;
    let mut finite_size = match &larger {
        Some((big_spec, h_big)) => Some(reference(
            h_big,
            big_spec,
            f64::INFINITY,
            tolerance.finite_size_log,
        )?),
        None => None,
    };
    truncation.check(primary.latest(), 0.0);
    if let Some(r) = finite_size.as_mut() {
        r.check(primary.latest(), 0.0);
    }
    for k in 1..grid.len() {
        let t = grid.time(k);
        primary.advance(grid.dt, t)?;
        let now = primary.latest();
        truncation.advance(now, grid.dt, t)?;
        if let Some(r) = finite_size.as_mut() {
            r.advance(now, grid.dt, t)?;
        }
    }

    let truncation_horizon = truncation.horizon.unwrap_or(0.0);
    let finite_size_horizon = finite_size.map(|r| r.horizon.unwrap_or(0.0));
    let t_star = finite_size_horizon.map_or(truncation_horizon, |t| t.min(truncation_horizon));
    let mut run = primary.finish(grid);
    run.series.restrict_validity(t_star);
    Ok((
        run,
        ConvergenceReport {
            t_star,
            truncation_horizon,
            finite_size_horizon,
            grid_end: grid.horizon(),
        },
    ))
}

pub fn convergence_check(
    params: &ModelParams,
    spec: &BasisSpec,
    grid: &TimeGrid,
    tol: f64,
) -> Result<ConvergenceReport> {
    let (_, report) = convergence_run(
        params,
        spec,
        InitialSpin::Down,
        grid,
        tol,
        &ConvergenceTolerance::default(),
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::propagate::DEFAULT_TOLERANCE;

    #[test]
    fn uncoupled_model_has_unit_echo() {
        let p = ModelParams::resonant(1.0, 0.0, 0.0, 4).unwrap();
        let spec = BasisSpec::spin_boson(4, 6).unwrap();
        let grid = TimeGrid::new(3.0, 0.01).unwrap();
        let run = run_quench(&p, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE).unwrap();
        assert!(run.series.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(run.series.values[0], 1.0);
        let report = convergence_check(&p, &spec, &grid, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(report.t_star, report.grid_end);
    }

    #[test]
    fn two_mode_rejects_up_state() {
        let spec = BasisSpec::two_mode(4).unwrap();
        assert!(initial_state(&spec, InitialSpin::Up).is_err());
    }

    #[test]
    fn rotating_wave_conserves_excitations() {
        let p = ModelParams::resonant(1.0, 0.7, 0.0, 6).unwrap();
        let spec = BasisSpec::spin_boson(6, 10).unwrap();
        let grid = TimeGrid::new(5.0, 0.01).unwrap();
        let run = run_quench(&p, &spec, InitialSpin::Up, &grid, DEFAULT_TOLERANCE).unwrap();
        assert!(run.diagnostics.max_excitation_drift < 1e-10);
        assert!(run.diagnostics.max_parity_leakage < 1e-10);
        assert!(run.diagnostics.max_norm_drift < 1e-10);
    }

    #[test]
    fn two_mode_hopping_only_is_periodic() {
        // g2 = 0: the vacuum is an eigenstate of the hopping term.
        let p = ModelParams::resonant(1.0, 0.4, 0.0, 1).unwrap();
        let spec = BasisSpec::two_mode(8).unwrap();
        let grid = TimeGrid::new(4.0, 0.01).unwrap();
        let run = run_quench(&p, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE).unwrap();
        assert!(run.series.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn echo_series_matches_run_quench() {
        let p = ModelParams::resonant(1.0, 0.4, 0.4, 1).unwrap();
        let spec = BasisSpec::two_mode(20).unwrap();
        let grid = TimeGrid::new(2.0, 0.01).unwrap();
        let h = build_hamiltonian(&p, &spec).unwrap();
        let psi0 = initial_state(&spec, InitialSpin::Down).unwrap();
        let a = echo_series(&h, &psi0, &grid, DEFAULT_TOLERANCE, Provenance::EffectiveOracle).unwrap();
        let b = run_quench(&p, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(a.values, b.series.values);
        assert_eq!(a.values[0], 1.0);
    }

    #[test]
    fn lockstep_references_match_separate_runs() {
        let p = ModelParams::resonant(1.0, 0.4, 1.6, 6).unwrap();
        let spec = BasisSpec::spin_boson(6, 10).unwrap();
        let grid = TimeGrid::new(3.0, 0.01).unwrap();
        let tolerance = ConvergenceTolerance::default();
        let (run, report) =
            convergence_run(&p, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE, &tolerance)
                .unwrap();
        let a = run_quench(&p, &spec, InitialSpin::Down, &grid, DEFAULT_TOLERANCE).unwrap();
        let b = run_quench(&p, &spec.with_cutoff(20).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
            .unwrap();
        let mut big_p = p;
        big_p.n_atoms = 12;
        let c = run_quench(&big_p, &spec.with_atoms(12).unwrap(), InitialSpin::Down, &grid, DEFAULT_TOLERANCE)
            .unwrap();
        assert_eq!(run.series.values, a.series.values);
        let trunc = agreement_horizon(&a.series, &b.series, tolerance.truncation_abs, tolerance.truncation_log);
        let finite = agreement_horizon(&a.series, &c.series, f64::INFINITY, tolerance.finite_size_log);
        assert_eq!(report.truncation_horizon, trunc);
        assert_eq!(report.finite_size_horizon, Some(finite));
        assert!(report.t_star < grid.horizon());
        assert_eq!(run.series.validity_horizon(), Some(report.t_star));
    }

    #[test]
    fn agreement_horizon_stops_at_first_mismatch() {
        let grid = TimeGrid::new(0.4, 0.1).unwrap();
        let a = EchoSeries::from_values(&grid, vec![1.0, 0.9, 0.8, 0.7, 0.6], Provenance::FiniteN);
        let b = EchoSeries::from_values(&grid, vec![1.0, 0.9, 0.8, 0.5, 0.6], Provenance::FiniteN);
        assert!((agreement_horizon(&a, &b, 1e-6, 1e-3) - 0.2).abs() < 1e-12);
        let c = EchoSeries::from_values(&grid, vec![0.5, 0.9, 0.8, 0.7, 0.6], Provenance::FiniteN);
        assert_eq!(agreement_horizon(&a, &c, 1e-6, 1e-3), 0.0);
    }
}

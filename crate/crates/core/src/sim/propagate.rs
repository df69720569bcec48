//! Short-iterative Lanczos propagation of `e^{-iHt}|ψ⟩`.
//!
//! Each grid step builds a Krylov basis of `H` from the current state
//! (three-term recurrence plus a second Gram-Schmidt pass against the two
//! previous vectors), exponentiates the small tridiagonal
//! projection exactly and grows the basis until the standard residual
//! estimate `β_m |[e^{-iT_m dt}]_{m,1}|` drops below the tolerance. Steps that
//! do not converge within the maximum dimension are split in halves.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::sparse::SparseHamiltonian;
use crate::echo::TimeGrid;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_KRYLOV_DIM: usize = 64;
/// Largest tolerated `|‖ψ‖ - 1|` during propagation.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;
const MAX_SPLIT_DEPTH: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Normalized basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot(&self.amplitudes, &other.amplitudes)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Counters collected over a propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KrylovStats {
    pub steps: usize,
    pub matvecs: usize,
    pub max_dim: usize,
    pub splits: usize,
}

pub struct KrylovPropagator<'a> {
    h: &'a SparseHamiltonian,
    tol: f64,
    max_dim: usize,
    basis: Vec<Vec<Complex64>>,
    work: Vec<Complex64>,
    last_dim: usize,
    scale: f64,
    stats: KrylovStats,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a SparseHamiltonian, tol: f64) -> Result<Self> {
        Self::with_max_dim(h, tol, MAX_KRYLOV_DIM)
    }

    pub fn with_max_dim(h: &'a SparseHamiltonian, tol: f64, max_dim: usize) -> Result<Self> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidParams(format!("tolerance must be positive (got {tol})")));
        }
        if max_dim < 2 {
            return Err(Error::InvalidParams("Krylov dimension must be at least 2".into()));
        }
        Ok(Self {
            h,
            tol,
            max_dim,
            basis: Vec::new(),
            work: vec![Complex64::new(0.0, 0.0); h.dimension()],
            last_dim: 0,
            scale: h.norm_bound().max(1.0),
            stats: KrylovStats::default(),
        })
    }

    pub fn stats(&self) -> KrylovStats {
        self.stats
    }

    /// Advances `psi` by `dt` in place.
    pub fn step(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        assert_eq!(psi.len(), self.h.dimension());
        self.stats.steps += 1;
        self.step_split(psi, dt, 0)
    }

    fn step_split(&mut self, psi: &mut [Complex64], dt: f64, depth: u32) -> Result<()> {
        match self.try_step(psi, dt)? {
            Ok(()) => Ok(()),
            Err(estimate) if depth >= MAX_SPLIT_DEPTH => Err(Error::NonConvergence {
                tol: self.tol,
                estimate,
            }),
            Err(_) => {
                self.stats.splits += 1;
                self.step_split(psi, 0.5 * dt, depth + 1)?;
                self.step_split(psi, 0.5 * dt, depth + 1)
            }
        }
    }

    /// Inner `Err` carries the final error estimate when the Krylov space
    /// maxed out; `psi` is untouched in that case.
    fn try_step(&mut self, psi: &mut [Complex64], dt: f64) -> Result<std::result::Result<(), f64>> {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(Ok(()));
        }
        let dim = self.h.dimension();
        while self.basis.len() < self.max_dim.min(dim) {
            self.basis.push(vec![Complex64::new(0.0, 0.0); dim]);
        }
        let max_dim = self.max_dim.min(dim);
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p / beta0;
        }

        let mut alpha = Vec::with_capacity(max_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
        let first_check = self.last_dim.saturating_sub(2).max(4);
        let mut estimate = f64::INFINITY;
        let scale = self.scale;

        for j in 0..max_dim {
            self.h.apply(&self.basis[j], &mut self.work);
            self.stats.matvecs += 1;
            let (prev, rest) = self.basis.split_at(j);
            let v = &rest[0];
            let zero = Complex64::new(0.0, 0.0);
            let mut a = zero;
            match prev.last() {
                Some(u) => {
                    let b = beta[j - 1];
                    for ((w, x), y) in self.work.iter_mut().zip(v).zip(u) {
                        *w -= y * b;
                        a += x.conj() * *w;
                    }
                }
                None => {
                    for (w, x) in self.work.iter_mut().zip(v) {
                        a += x.conj() * *w;
                    }
                }
            }
            let a = a.re;
            alpha.push(a);
            // second pass against the last two vectors only
            let (mut c1, mut c0) = (zero, zero);
            match prev.last() {
                Some(u) => {
                    for ((w, x), y) in self.work.iter_mut().zip(v).zip(u) {
                        *w -= x * a;
                        c1 += x.conj() * *w;
                        c0 += y.conj() * *w;
                    }
                }
                None => {
                    for (w, x) in self.work.iter_mut().zip(v) {
                        *w -= x * a;
                        c1 += x.conj() * *w;
                    }
                }
            }
            let mut norm2 = 0.0;
            match prev.last() {
                Some(u) => {
                    for ((w, x), y) in self.work.iter_mut().zip(v).zip(u) {
                        *w -= x * c1 + y * c0;
                        norm2 += w.norm_sqr();
                    }
                }
                None => {
                    for (w, x) in self.work.iter_mut().zip(v) {
                        *w -= x * c1;
                        norm2 += w.norm_sqr();
                    }
                }
            }
            let b = norm2.sqrt();
            let m = j + 1;
            let breakdown = b <= 1e-14 * scale;
            let last = m == max_dim;

            if breakdown || last || (m >= first_check && (m - first_check).is_multiple_of(2)) {
                let coeffs = exp_tridiagonal(&alpha, &beta, dt);
                estimate = if breakdown { 0.0 } else { b * coeffs[m - 1].norm() };
                if estimate <= self.tol {
                    psi.iter_mut().for_each(|p| *p = Complex64::new(0.0, 0.0));
                    for (c, v) in coeffs.iter().zip(&self.basis[..m]) {
                        let c = c * beta0;
                        for (p, x) in psi.iter_mut().zip(v) {
                            *p += c * x;
                        }
                    }
                    self.last_dim = m;
                    self.stats.max_dim = self.stats.max_dim.max(m);
                    return Ok(Ok(()));
                }
                if breakdown || last {
                    break;
                }
            }
            beta.push(b);
            for (v, w) in self.basis[j + 1].iter_mut().zip(&self.work) {
                *v = w / b;
            }
        }
        Ok(Err(estimate))
    }
}

/// `e^{-i T dt} e_1` for the symmetric tridiagonal `T` (diagonal `alpha`,
/// off-diagonal `beta`, `beta.len() + 1 >= alpha.len()`).
fn exp_tridiagonal(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
                    phase * (q[(i, k)] * q[(0, k)])
                })
                .sum()
        })
        .collect()
}

/// Propagates `psi0` over `grid`, calling `visit(k, t_k, ψ(t_k))` for every
/// grid point including `k = 0`.
pub fn propagate_with<F>(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    grid: &TimeGrid,
    tol: f64,
    mut visit: F,
) -> Result<KrylovStats>
where
    F: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    if psi0.len() != h.dimension() {
        return Err(Error::BasisMismatch(format!(
            "state has length {}, Hamiltonian dimension {}",
            psi0.len(),
            h.dimension()
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "initial state must be normalized (norm {})",
            psi0.norm()
        )));
    }
    let mut propagator = KrylovPropagator::new(h, tol)?;
    let mut psi = psi0.amplitudes().to_vec();
    visit(0, 0.0, &psi)?;
    for k in 1..grid.len() {
        propagator.step(&mut psi, grid.dt)?;
        let t = grid.time(k);
        let n = norm(&psi);
        if (n - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { norm: n, time: t });
        }
        visit(k, t, &psi)?;
    }
    Ok(propagator.stats())
}

/// Collects every state on the grid; meant for small problems.
pub fn propagate(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    grid: &TimeGrid,
    tol: f64,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(grid.len());
    propagate_with(h, psi0, grid, tol, |_, _, psi| {
        out.push(StateVector::from_amplitudes(psi.to_vec()));
        Ok(())
    })?;
    Ok(out)
}

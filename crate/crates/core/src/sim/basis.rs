use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Hilbert space a simulation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    /// One boson mode ⊗ the spin-N/2 Dicke manifold (the full model).
    SpinBoson,
    /// Two boson modes (the thermodynamic-limit effective model).
    TwoMode,
}

/// Truncated product basis.
///
/// Indexing is row-major: `k·(n_max+1) + n` for the spin-boson basis, where
/// `k = m + N/2` counts excited atoms, and `n_a·(n_max+1) + n_b` for two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub n_atoms: usize,
    pub boson_cutoff: usize,
}

impl BasisSpec {
    pub fn spin_boson(n_atoms: usize, boson_cutoff: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidParams("n_atoms must be at least 1".into()));
        }
        Self::checked(BasisKind::SpinBoson, n_atoms, boson_cutoff)
    }

    pub fn two_mode(boson_cutoff: usize) -> Result<Self> {
        Self::checked(BasisKind::TwoMode, 0, boson_cutoff)
    }

    fn checked(kind: BasisKind, n_atoms: usize, boson_cutoff: usize) -> Result<Self> {
        if boson_cutoff < 1 {
            return Err(Error::CutoffTooSmall(boson_cutoff));
        }
        Ok(Self {
            kind,
            n_atoms,
            boson_cutoff,
        })
    }

    pub fn mode_count(&self) -> usize {
        match self.kind {
            BasisKind::SpinBoson => 1,
            BasisKind::TwoMode => 2,
        }
    }

    fn stride(&self) -> usize {
        self.boson_cutoff + 1
    }

    /// Size of the outer factor: `N + 1` Dicke states or `n_max + 1` Fock states.
    pub fn outer_dim(&self) -> usize {
        match self.kind {
            BasisKind::SpinBoson => self.n_atoms + 1,
            BasisKind::TwoMode => self.stride(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.outer_dim() * self.stride()
    }

    pub fn index(&self, outer: usize, n: usize) -> usize {
        debug_assert!(outer < self.outer_dim() && n < self.stride());
        outer * self.stride() + n
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.stride(), index % self.stride())
    }

    /// Doubled boson cutoff, for truncation checks.
    pub fn with_cutoff(&self, boson_cutoff: usize) -> Result<Self> {
        Self::checked(self.kind, self.n_atoms, boson_cutoff)
    }

    pub fn with_atoms(&self, n_atoms: usize) -> Result<Self> {
        match self.kind {
            BasisKind::SpinBoson => Self::spin_boson(n_atoms, self.boson_cutoff),
            BasisKind::TwoMode => Err(Error::BasisMismatch(
                "the two-mode basis has no atom number".into(),
            )),
        }
    }

    pub fn require(&self, kind: BasisKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::BasisMismatch(format!(
                "expected a {kind:?} basis, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

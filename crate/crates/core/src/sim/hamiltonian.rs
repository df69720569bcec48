//! Matrix assembly for the full model and its two-mode limit.

use num_complex::Complex64;

use super::basis::{BasisKind, BasisSpec};
use super::sparse::{HermitianBuilder, SparseHamiltonian};
use crate::error::Result;
use crate::model::ModelParams;

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `ω a†a + ω0 J_z + (g1/√N)(a†J- + aJ+) + (g2/√N)(a†J+ + aJ-)` on `|j = N/2, m⟩ ⊗ |n⟩`.
///
/// Boson raising beyond the cutoff is dropped.
pub fn build_adm(params: &ModelParams, spec: &BasisSpec) -> Result<SparseHamiltonian> {
    params.validate()?;
    spec.require(BasisKind::SpinBoson)?;
    let n_atoms = spec.n_atoms;
    let n_max = spec.boson_cutoff;
    let half = 0.5 * n_atoms as f64;
    let scale = 1.0 / (n_atoms as f64).sqrt();

    let mut b = HermitianBuilder::with_capacity(spec.dimension(), 5 * spec.dimension());
    for k in 0..=n_atoms {
        // k = m + N/2 excited atoms
        let m = k as f64 - half;
        for n in 0..=n_max {
            let row = spec.index(k, n);
            b.diagonal(row, params.omega * n as f64 + params.omega0 * m);
            if n == n_max {
                continue;
            }
            let raise_boson = ((n + 1) as f64).sqrt();
            // a† J-: |k, n⟩ → |k-1, n+1⟩, ⟨m-1|J-|m⟩ = √(k(N - k + 1))
            if k >= 1 {
                let lower = ((k * (n_atoms - k + 1)) as f64).sqrt();
                b.pair(spec.index(k - 1, n + 1), row, real(params.g1 * scale * raise_boson * lower));
            }
            // a† J+: |k, n⟩ → |k+1, n+1⟩, ⟨m+1|J+|m⟩ = √((N - k)(k + 1))
            if k < n_atoms {
                let raise = (((n_atoms - k) * (k + 1)) as f64).sqrt();
                b.pair(spec.index(k + 1, n + 1), row, real(params.g2 * scale * raise_boson * raise));
            }
        }
    }
    Ok(b.build())
}

/// `ω a†a + ω0 b†b + g1(a†b + ab†) + g2(a†b† + ab)` on `|n_a⟩ ⊗ |n_b⟩`.
///
/// `ω0` multiplies the atomic mode, as the spin term does before the
/// large-N limit; for resonant parameters this is the usual `ω(a†a + b†b)`.
pub fn build_effective(params: &ModelParams, spec: &BasisSpec) -> Result<SparseHamiltonian> {
    params.validate()?;
    spec.require(BasisKind::TwoMode)?;
    let n_max = spec.boson_cutoff;

    let mut b = HermitianBuilder::with_capacity(spec.dimension(), 5 * spec.dimension());
    for na in 0..=n_max {
        for nb in 0..=n_max {
            let row = spec.index(na, nb);
            b.diagonal(row, params.omega * na as f64 + params.omega0 * nb as f64);
            if na == n_max {
                continue;
            }
            let raise_a = ((na + 1) as f64).sqrt();
            // a† b
            if nb >= 1 {
                let v = params.g1 * raise_a * (nb as f64).sqrt();
                b.pair(spec.index(na + 1, nb - 1), row, real(v));
            }
            // a† b†
            if nb < n_max {
                let v = params.g2 * raise_a * ((nb + 1) as f64).sqrt();
                b.pair(spec.index(na + 1, nb + 1), row, real(v));
            }
        }
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rotating_wave_element_for_two_atoms() {
        let p = ModelParams::resonant(1.0, 0.37, 0.0, 2).unwrap();
        let spec = BasisSpec::spin_boson(2, 4).unwrap();
        let h = build_adm(&p, &spec).unwrap();
        // ⟨m=-1, n=1| H |m=0, n=0⟩ = g1
        let v = h.get(spec.index(0, 1), spec.index(1, 0));
        assert_relative_eq!(v.re, 0.37, epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn free_diagonal() {
        let p = ModelParams::new(1.3, 0.7, 0.2, 0.5, 4).unwrap();
        let spec = BasisSpec::spin_boson(4, 5).unwrap();
        let h = build_adm(&p, &spec).unwrap();
        for k in 0..=4 {
            for n in 0..=5 {
                let i = spec.index(k, n);
                let expected = 1.3 * n as f64 + 0.7 * (k as f64 - 2.0);
                assert_relative_eq!(h.get(i, i).re, expected, epsilon = 1e-14);
            }
        }
        assert!(h.is_hermitian());
    }

    #[test]
    fn uncoupled_is_diagonal() {
        let p = ModelParams::resonant(1.0, 0.0, 0.0, 6).unwrap();
        let h = build_adm(&p, &BasisSpec::spin_boson(6, 8).unwrap()).unwrap();
        assert!(h.is_diagonal());
    }

    #[test]
    fn effective_elements() {
        let p = ModelParams::resonant(1.0, 0.3, 0.7, 1).unwrap();
        let spec = BasisSpec::two_mode(6).unwrap();
        let h = build_effective(&p, &spec).unwrap();
        assert_relative_eq!(h.get(spec.index(1, 1), spec.index(0, 0)).re, 0.7);
        assert_relative_eq!(h.get(spec.index(1, 0), spec.index(0, 1)).re, 0.3);
        assert_relative_eq!(h.get(spec.index(3, 2), spec.index(3, 2)).re, 5.0);
        assert!(h.is_hermitian());
    }

    #[test]
    fn rejects_wrong_basis() {
        let p = ModelParams::resonant(1.0, 0.3, 0.7, 4).unwrap();
        assert!(build_adm(&p, &BasisSpec::two_mode(4).unwrap()).is_err());
        assert!(build_effective(&p, &BasisSpec::spin_boson(4, 4).unwrap()).is_err());
    }

    #[test]
    fn hopping_conserves_total_quanta() {
        let p = ModelParams::resonant(1.0, 0.6, 0.0, 1).unwrap();
        let spec = BasisSpec::two_mode(5).unwrap();
        let h = build_effective(&p, &spec).unwrap();
        for (r, c, _) in h.entries() {
            let (a1, b1) = spec.split(r);
            let (a2, b2) = spec.split(c);
            assert_eq!(a1 + b1, a2 + b2);
        }
    }
}

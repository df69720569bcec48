//! Finite-size quench dynamics in truncated Fock bases.

pub mod basis;
pub mod hamiltonian;
pub mod propagate;
pub mod run;
pub mod sparse;

pub use basis::{BasisKind, BasisSpec};
pub use hamiltonian::{build_adm, build_effective};
pub use propagate::{
    propagate, propagate_with, KrylovPropagator, KrylovStats, StateVector, DEFAULT_TOLERANCE,
    MAX_KRYLOV_DIM, NORM_DRIFT_LIMIT,
};
pub use run::{
    agreement_horizon, build_hamiltonian, convergence_check, convergence_run, echo_series,
    initial_state, mirror_run, run_quench, ConvergenceReport, ConvergenceTolerance, InitialSpin,
    QuenchRun, RunDiagnostics,
};
pub use sparse::{HermitianBuilder, SparseHamiltonian};

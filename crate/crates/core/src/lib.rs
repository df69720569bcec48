//! Phase classification and quench dynamics of the anisotropic Dicke model.
//!
//! * [`model`]: parameters, Nambu blocks, exceptional points and the
//!   NP / SP1 / SP2 / SP3 classifier.
//! * [`bogoliubov`]: normal form of a single-mode quadratic Hamiltonian.
//! * [`echo`]: closed-form Loschmidt echoes and their log-derivative.
//! * [`extract`]: decay rate and frequencies from a sampled echo.
//! * [`sim`]: sparse Hamiltonians and Lanczos propagation for the full model
//!   and its two-mode limit.
//! * [`sweep`]: single-point runs, presets and parallel grid sweeps.
//! * [`io`]: the versioned CSV format and atomic writes.

pub mod bogoliubov;
pub mod echo;
pub mod error;
pub mod extract;
pub mod io;
pub mod model;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};

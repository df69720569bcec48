use thiserror::Error;

use crate::model::BoundaryLine;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("analytic results require omega0 == omega (got omega = {omega}, omega0 = {omega0})")]
    UnsupportedParams { omega: f64, omega0: f64 },

    #[error("parameter point lies on a phase boundary ({0})")]
    OnBoundary(BoundaryLine),

    #[error("degenerate quadratic form: {0}")]
    DegenerateForm(String),

    #[error("boson cutoff must be at least 1 (got {0})")]
    CutoffTooSmall(usize),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("Krylov propagation did not reach tolerance {tol:e} (error estimate {estimate:e})")]
    NonConvergence { tol: f64, estimate: f64 },

    #[error("state norm drifted to {norm} at t = {time}")]
    NormDrift { norm: f64, time: f64 },

    #[error("echo sample {index} is non-positive or below the underflow floor ({value:e})")]
    NonPositiveEcho { index: usize, value: f64 },

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("validity window too short: {0}")]
    WindowTooShort(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name, used in the status column of sweeps.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::UnsupportedParams { .. } => "unsupported_params",
            Error::OnBoundary(_) => "boundary",
            Error::DegenerateForm(_) => "degenerate_form",
            Error::CutoffTooSmall(_) => "cutoff_too_small",
            Error::BasisMismatch(_) => "basis_mismatch",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NormDrift { .. } => "norm_drift",
            Error::NonPositiveEcho { .. } => "non_positive_echo",
            Error::MalformedCsv(_) => "malformed_csv",
            Error::WindowTooShort(_) => "window_too_short",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

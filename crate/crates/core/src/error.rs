//! Error type shared by all library modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix that must be positive definite has an eigenvalue <= 0.
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue})")]
    NonPositiveMatrix { min_eigenvalue: f64 },

    /// A covariance matrix violates symmetry, the uncertainty bound, or the
    /// shot-noise floor on its diagonal.
    #[error("matrix is not a physical covariance matrix: {reason}")]
    NonPhysicalMatrix { reason: String },

    /// Two-mode parameters (a, b, c) do not describe a physical state.
    #[error("non-physical two-mode parameters a={a}, b={b}, c={c}")]
    NonPhysicalInput { a: f64, b: f64, c: f64 },

    /// A scalar argument is outside the mathematical domain of a function.
    #[error("domain error in {what}: {value}")]
    Domain { what: &'static str, value: f64 },

    /// Mode index out of range.
    #[error("mode index {index} out of range for {n_modes} modes")]
    BadModeIndex { index: usize, n_modes: usize },

    /// A protocol, channel, or detector parameter is outside its valid range.
    #[error("invalid parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Data fed to an estimator make the statistic undefined.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The B1 variance sits at (or below) shot noise, so the angular error
    /// is unidentifiable.
    #[error("insufficient signal: Var(x_B1) = {v_b1} is too close to shot noise")]
    InsufficientSignal { v_b1: f64 },

    /// Batch file I/O or format problems.
    #[error("batch format error: {0}")]
    BatchFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue or pivot {value:.6e} < -{tolerance:.3e}")]
    NotPsd { value: f64, tolerance: f64 },

    #[error("matrix or vector contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("time step too large: jump {index} has rate*dt*norm^2 = {value:.6} >= 1")]
    StepTooLarge { index: usize, value: f64 },

    #[error("invalid probability: {reason}")]
    InvalidProbability { reason: String },

    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    #[error("matrix is not a contraction: spectral norm {norm} exceeds 1 + {tolerance:.3e}")]
    NotContraction { norm: f64, tolerance: f64 },

    #[error("state vector is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("bad integration step: {reason}")]
    BadStep { reason: String },

    #[error("observable is the zero matrix")]
    ZeroObservable,

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },
}

impl Error {
    /// Stable module-qualified error code, used by the CLI for
    /// machine-readable failure lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "linalg.not_hermitian",
            Error::NotPsd { .. } => "linalg.not_psd",
            Error::NonFinite => "linalg.non_finite",
            Error::DimensionMismatch { .. } => "core.dimension_mismatch",
            Error::StepTooLarge { .. } => "channels.step_too_large",
            Error::InvalidProbability { .. } => "channels.invalid_probability",
            Error::InvalidModel { .. } => "channels.invalid_model",
            Error::NotContraction { .. } => "dilation.not_contraction",
            Error::NotNormalized { .. } => "measurement.not_normalized",
            Error::BadStep { .. } => "evolution.bad_step",
            Error::ZeroObservable => "measurement.zero_observable",
            Error::InvalidArgument { .. } => "core.invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument was outside its admissible range.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Two matrices or vectors that must share a dimension did not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    /// A density matrix failed one of its invariants (trace, PSD, Hermiticity).
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("eigendecomposition did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    /// A Gram matrix that must be PSD produced a clearly negative eigenvalue.
    #[error("Gram matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("all-zero LFSR register")]
    ZeroRegister,

    /// The requested problem exceeds the exhaustive-enumeration caps.
    #[error("regime cap exceeded: {0}")]
    RegimeCap(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phi is undefined on the unstable branch for zbar = {zbar} (1 - 15 zbar <= 0)")]
    PhiDomain { zbar: f64 },

    #[error("horizontal diffusivity formula requires L < 0; configure an explicit value for neutral/stable runs")]
    UnsupportedStability,

    #[error("CFL violation: Courant number {courant:.4} exceeds 1")]
    CflViolation { courant: f64 },

    #[error("singular tridiagonal system: {0}")]
    SingularSystem(String),

    #[error("point outside grid: {0}")]
    OutsideGrid(String),

    #[error("wind series does not cover t = {t} s: {reason}")]
    WindCoverage { t: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero output variance; Sobol indices are undefined")]
    ZeroVariance,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::OutsideGrid(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::GridMismatch(_)
                | Error::InsufficientData(_)
                | Error::UnsupportedStability
                | Error::WindCoverage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

/// Errors produced by constructors, criteria and the exchange format.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not a state: eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e} x spectral norm")]
    NotAState { min_eigenvalue: f64, tolerance: f64 },

    #[error("operator is not a projector (max deviation {deviation:.3e})")]
    NotAProjector { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero vector has no Schmidt decomposition")]
    ZeroVector,

    #[error("post-measurement trace vanishes")]
    ZeroTrace,

    #[error("direct-sum windows overlap on side {side}")]
    OverlappingWindows { side: char },

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EigenNonConvergence | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

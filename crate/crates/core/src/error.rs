use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense construction of {rows}x{cols} exceeds the {cap} entry guard")]
    TooLarge { rows: usize, cols: usize, cap: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("degenerate factor Gram matrix (eigenvalue ratio {ratio:e})")]
    DegenerateGram { ratio: f64 },

    #[error("singular matrix")]
    Singular,

    #[error("degenerate factor Gram matrix at iteration {iter}")]
    DegenerateIterate { iter: usize },

    #[error("rank-deficient: sigma_r/sigma_1 = {ratio:e}")]
    RankDeficient { ratio: f64 },

    #[error("zero ground truth")]
    ZeroGroundTruth,

    #[error("frequency rejection sampling exceeded {attempts} attempts")]
    RejectionCap { attempts: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed signal file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported path operation: {0}")]
    UnsupportedPath(String),

    #[error("step {step}: non-finite density ratio")]
    NonFiniteRatio { step: usize },

    #[error("step {step}: not enough samples ({found} < {required})")]
    NotEnoughSamples {
        step: usize,
        required: usize,
        found: usize,
    },

    #[error("step {step}: no minimizer in bracket [{lo}, {hi}]")]
    OptimizationFailed { step: usize, lo: f64, hi: f64 },

    #[error("quadrature not available: {0}")]
    UnsupportedQuadrature(String),

    #[error("divergence is infinite")]
    InfiniteDivergence,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

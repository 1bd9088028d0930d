use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The Cesàro mean of a characteristic function did not settle.
    #[error("atom extraction failed: {0}")]
    AtomExtraction(String),

    /// Post-selection amplitude too small for a weak value.
    #[error("weak value undefined: post-selection amplitude {0:e}")]
    UndefinedWeakValue(f64),

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

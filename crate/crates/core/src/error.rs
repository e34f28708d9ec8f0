use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty population")]
    EmptyPopulation,

    #[error("degenerate range")]
    DegenerateRange,

    #[error("grid too small: {levels} levels, need at least 3")]
    GridTooSmall { levels: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("value {value} is not on the fitness grid")]
    OffGrid { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate instance: tour has zero length")]
    DegenerateInstance,

    #[error("value {value} out of range [0, {max}]")]
    OutOfRange { value: i64, max: i64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

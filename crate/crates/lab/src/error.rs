use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: need at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot project a (near-)zero vector onto the sphere")]
    DegenerateProjection,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("argument {value} outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

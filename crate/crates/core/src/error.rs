use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested quantity does not exist for these parameters
    /// (e.g. an infinite moment generating function).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("maximizer {theta} lies on the boundary of [{lo}, {hi}]; widen the window")]
    Window { theta: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {achieved:e}, requested {requested:e}")]
    Quadrature { value: f64, achieved: f64, requested: f64 },

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("circulant embedding failed: {0}")]
    Embedding(String),

    #[error("local time {local_time} exceeds the fBm grid span {span}")]
    Range { local_time: f64, span: f64 },

    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<Error> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension {n} exceeds the supported maximum {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("network is not Eulerian at vertex {vertex}")]
    NotEulerian { vertex: usize },

    #[error("network has odd degree at vertex {vertex}")]
    NotEven { vertex: usize },

    #[error("network has a nonzero count on ({0}, {1}), which is not an edge")]
    OffGraph(usize, usize),

    #[error("unsupported intensity alpha = {0}; only 1/2 and 1 are supported")]
    UnsupportedAlpha(f64),

    #[error("negative occupation value {value} at vertex {vertex}")]
    NegativeOccupation { vertex: usize, value: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

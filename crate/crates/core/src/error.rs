use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum AdicError {
    #[error("unknown catalog problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid problem `{name}`: {reason}")]
    InvalidProblem { name: String, reason: String },

    #[error("constraint row {row} has lower bound {lower} above upper bound {upper}")]
    InvertedConstraintRange { row: usize, lower: f64, upper: f64 },

    #[error("matrix JJ^T is numerically rank deficient (size {size})")]
    RankDeficient { size: usize },

    #[error("backtracking step requested with a zero LP direction")]
    ZeroDirection,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("trace line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("results line {line}: {message}")]
    ResultsParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AdicError>;

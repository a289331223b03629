use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("column `{0}` is constant, propensity is degenerate")]
    DegenerateColumn(String),

    #[error("single-class target requires ridge_lambda > 0")]
    SingleClass,

    #[error("enumeration bound exceeded: {binary} binary variables, limit is {limit}")]
    EnumerationBound { binary: usize, limit: usize },

    #[error("treatment assignment does not match scenario: {0}")]
    AssignmentMismatch(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("malformed CSV at line {line}: {detail}")]
    MalformedCsv { line: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => Error::MalformedCsv {
                line,
                detail: format!("{kind:?}"),
            },
        }
    }
}

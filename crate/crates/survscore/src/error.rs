use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("quantile level {0} is not on the grid")]
    LevelNotOnGrid(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unknown group label `{0}`")]
    UnknownGroup(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 1 validation failure, 2 usage
    /// error, 3 I/O or parse error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv { .. } => 3,
            _ => 1,
        }
    }
}

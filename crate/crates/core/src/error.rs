use thiserror::Error;

/// Errors raised by the estimators, tests and study engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("lag {lag} out of range for n = {n}")]
    Lag { lag: usize, n: usize },

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("estimator system: {0}")]
    System(String),

    #[error("block scheme: {0}")]
    Block(String),

    #[error("degenerate variance estimate: {0}")]
    DegenerateVariance(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateVariance(_) | Error::NotPsd(_) | Error::System(_) => 3,
            Error::Replicate { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Each variant maps onto one process exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("graph not strongly connected")]
    NotStronglyConnected,
    #[error("resource cap exceeded: {what} exceeds {cap}")]
    ResourceCap { what: &'static str, cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::NotStronglyConnected
            | Error::InvalidInput(_)
            | Error::Io { .. }
            | Error::Json(_) => 1,
            Error::ResourceCap { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Inconclusive(_) => 4,
        }
    }
}

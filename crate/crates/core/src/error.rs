use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("coefficient index {index} is outside the table (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a context prefix to numeric failures, leaving other kinds untouched.
    pub fn in_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::NoConvergence { index, iterations } => {
                Error::Numeric(format!("{ctx}: eigenvalue {index} did not converge after {iterations} iterations"))
            }
            Error::Numeric(msg) => Error::Numeric(format!("{ctx}: {msg}")),
            other => other,
        }
    }
}

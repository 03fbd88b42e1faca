use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("non-finite value at site {site} ({context})")]
    NonFinite { site: usize, context: &'static str },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn params(message: impl Into<String>) -> Self {
        Error::InvalidParams(message.into())
    }

    /// Process exit status: 2 for configuration problems, 3 for failed
    /// validation, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::Config { .. }
            | Error::Json(_) => 2,
            Error::Validation(_) => 3,
            _ => 1,
        }
    }
}

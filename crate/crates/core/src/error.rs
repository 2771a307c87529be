use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration key carries a value outside its domain.
    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed configuration: {0}")]
    Parse(String),

    /// A numeric precondition of a model function was violated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

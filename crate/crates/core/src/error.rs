use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("key `{key}` is not numeric: {value}")]
    NotNumeric { key: String, value: String },

    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    #[error("no sign change in bracket [{lo:e}, {hi:e}] while solving {what}")]
    NoBracket { what: String, lo: f64, hi: f64 },

    #[error("non-finite state at step {step}")]
    NonFinite { step: u64 },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the laboratory when an input violates an operation's
/// preconditions or a numerical routine cannot complete.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),

    #[error(
        "beta = {beta} does not define a probability measure in dimension {n} (need beta > n/2)"
    )]
    NotProbability { n: usize, beta: f64 },

    #[error("{what}: requires {condition}")]
    Precondition {
        what: &'static str,
        condition: String,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear solve failed: {0}")]
    Singular(&'static str),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn precondition(what: &'static str, condition: impl Into<String>) -> Self {
        Error::Precondition {
            what,
            condition: condition.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical tolerance could not be reached; carries the best achieved error.
    #[error("tolerance not achieved: requested {requested:e}, achieved {achieved:e} ({context})")]
    ToleranceNotMet {
        requested: f64,
        achieved: f64,
        context: String,
    },

    /// An internal consistency check failed. This always indicates a bug in an evaluator.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 2,
            Error::ToleranceNotMet { .. } => 3,
            Error::Invariant(_) => 4,
        }
    }
}

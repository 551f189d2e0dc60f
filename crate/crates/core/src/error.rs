use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A likelihood or transform was evaluated at a point where it is not
    /// defined. `pair` carries the offending ordered pair when there is one.
    #[error("evaluation error: {message}")]
    Evaluation {
        message: String,
        pair: Option<(usize, usize)>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("diagnostics error: {0}")]
    Diagnostics(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn evaluation(msg: impl Into<String>) -> Self {
        Error::Evaluation {
            message: msg.into(),
            pair: None,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The parameters are meaningful but this implementation does not cover them.
    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    /// Matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("column {column} is constant; its correlation is undefined")]
    DegenerateColumn { column: usize },

    /// A construction ingredient failed its validity check.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("failed to parse design data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for errors caused by bad caller input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

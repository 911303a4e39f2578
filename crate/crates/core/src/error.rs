use thiserror::Error;

/// Errors raised by every layer of the pipeline.
///
/// The variants map one-to-one onto the CLI exit codes, see [`Error::exit_code`].
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource cap exceeded: {what} (cap {cap})")]
    Resource { what: String, cap: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(what: impl Into<String>, cap: usize) -> Self {
        Error::Resource {
            what: what.into(),
            cap,
        }
    }

    /// 0 success, 1 internal, 2 input, 3 precondition/domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 1,
            Error::Input(_) | Error::Resource { .. } => 2,
            Error::Precondition(_) | Error::Domain(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

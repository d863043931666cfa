use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map onto the CLI exit codes: `Domain` and `Usage` are
/// validation failures, `Numerical` and `Simulation` are runtime failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

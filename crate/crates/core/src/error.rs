use thiserror::Error;

/// Errors raised by the quadrature, model and sampling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure did not reach its tolerance within budget.
    /// `best_estimate` is the value it had when it gave up.
    #[error("computation error: {message} (best estimate {best_estimate}, error estimate {error_estimate})")]
    Computation { message: String, best_estimate: f64, error_estimate: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },

    /// An iterative procedure stopped before meeting its tolerance.
    #[error("{op}: no convergence after {iterations} iterations (best estimate {estimate})")]
    NotConverged {
        op: &'static str,
        iterations: usize,
        estimate: f64,
    },

    /// Input data cannot support the requested estimate (too few samples,
    /// zero spread, a single occupied bin, ...).
    #[error("{op}: degenerate input ({detail})")]
    Degenerate { op: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn degenerate(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Degenerate {
            op,
            detail: detail.into(),
        }
    }
}

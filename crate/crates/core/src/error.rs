use thiserror::Error;

/// Errors raised by scoring, transforms and graph operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The parent sets contain a directed cycle.
    #[error("directed cycle among variables {0:?}")]
    Cycle(Vec<usize>),
    /// Caller violated a precondition (mismatched variables, absent arc, bad index).
    #[error("{0}")]
    Usage(String),
    /// A probability, hyperparameter or CPT entry is not strictly positive.
    #[error("positivity violated: {0}")]
    Positivity(String),
    /// The joint state space exceeds the configured cap.
    #[error("state space of {states} configurations exceeds the cap of {cap}")]
    Capacity { states: u128, cap: usize },
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Symmetric factorization hit a pivot at or below tolerance.
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Cycle(_) => "structural",
            Error::Usage(_) => "usage",
            Error::Positivity(_) => "positivity",
            Error::Capacity { .. } => "capacity",
            Error::Domain(_) => "domain",
            Error::NotPositiveDefinite { .. } => "not-positive-definite",
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

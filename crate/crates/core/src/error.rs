use thiserror::Error;

use crate::lamperti::LampertiWitness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Block counts or block dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument lies outside the domain of the operation (p < 1, a
    /// non-Hermitian input to the functional calculus, bad convex weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A certificate failed its own verification step.
    #[error("inconsistent input: {0}")]
    Inconsistency(String),

    /// A theorem hypothesis does not hold; carries the refuting witness when one was found.
    #[error("hypothesis violated: {reason}")]
    Hypothesis {
        reason: String,
        witness: Option<Box<LampertiWitness>>,
    },

    #[error("resource limit exceeded: {required} dimensions required, budget is {budget}")]
    Resource { required: usize, budget: usize },

    #[error("ill-conditioned operator: condition number {0:e}")]
    Conditioning(f64),

    /// Singular values of I - T that are neither clearly zero nor clearly away from zero.
    #[error("ambiguous spectral cluster at 1: {0}")]
    SpectralCluster(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by distribution construction, quadrature and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Distribution or scheme parameters violate a documented constraint.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A quadrature detected a divergent or non-convergent integral,
    /// signalling an inadmissible profile.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// A quadrature refinement disagreement exceeded the requested
    /// tolerance. The estimate is attached so callers can decide whether
    /// to retry with a larger budget.
    #[error(
        "accuracy failure{}: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}",
        context_suffix(context)
    )]
    AccuracyFailure {
        estimate: f64,
        tolerance: f64,
        context: String,
    },

    /// Experiment configuration is malformed or incomplete.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The requested reference solution or feature is not provided.
    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

impl Error {
    pub(crate) fn accuracy(estimate: f64, tolerance: f64, context: impl Into<String>) -> Self {
        Error::AccuracyFailure {
            estimate,
            tolerance,
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

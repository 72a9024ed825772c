use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An input violated the invariant set the Duhamel map is defined on.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Picard iteration did not reach tolerance {tolerance:e} in {iterations} iterations")]
    Convergence {
        iterations: usize,
        tolerance: f64,
        residual_history: Vec<f64>,
    },

    /// Consecutive Picard updates did not shrink by the guaranteed factor.
    #[error("contraction certificate failed at iteration {iteration}: ratio {ratio:.4} exceeds {limit}")]
    Certification {
        iteration: usize,
        ratio: f64,
        limit: f64,
        residual_history: Vec<f64>,
    },

    #[error("patch {index}: {source}")]
    Patch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

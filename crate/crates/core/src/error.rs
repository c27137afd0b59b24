use thiserror::Error;

/// Errors raised by the simulation and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs that must be aligned (coefficients vs. modes, matrix shapes) are not.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Too many replicas overflowed to non-finite values.
    #[error("{degenerate} of {total} replicas degenerate (non-finite), above the 1% limit")]
    Degenerate { degenerate: usize, total: usize },

    /// The Burgers time stepper produced non-finite coefficients.
    #[error("blow-up at step {step} (t = {time}); rerun with a smaller step")]
    BlowUp { step: usize, time: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

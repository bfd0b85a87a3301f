use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible design: rate {rate} + epsilon {epsilon} must stay below capacity {capacity} nats")]
    InfeasibleDesign {
        rate: f64,
        epsilon: f64,
        capacity: f64,
    },

    /// The requested codebook needs more codewords than the configured cap.
    /// `log_required` is the natural log of the count (the n·R budget).
    #[error("too many codewords: ln(count) = {log_required:.4} exceeds ln(cap) = {:.4} (cap {cap})", (*.cap as f64).ln())]
    TooManyCodewords { log_required: f64, cap: usize },

    #[error("expurgation removed every standard codeword")]
    EmptyCodebook,

    /// The conical filter kept fewer codewords than the target size.
    #[error("construction declared an error: kept {kept} of {required} codewords after {examined} candidates")]
    DeclareError {
        kept: usize,
        required: usize,
        examined: usize,
    },

    #[error("insufficient trials: expected {expected_hits:.3} hits, need at least {required}")]
    InsufficientTrials { expected_hits: f64, required: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

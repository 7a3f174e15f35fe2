use thiserror::Error;

/// Errors produced by the inference engine and its generators.
#[derive(Debug, Error)]
pub enum BnrError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A covariance or precision matrix could not be factorized.
    #[error("numerical singularity in {context}")]
    NumericalSingularity { context: String },

    #[error("degenerate posterior: {0}")]
    Degenerate(String),

    /// A chain failed part-way through; wraps the underlying failure.
    #[error("chain {chain} failed at iteration {iteration}: {source}")]
    Chain {
        chain: usize,
        iteration: u64,
        #[source]
        source: Box<BnrError>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl BnrError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        BnrError::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        BnrError::DimensionMismatch(msg.into())
    }

    pub(crate) fn singular(context: impl Into<String>) -> Self {
        BnrError::NumericalSingularity {
            context: context.into(),
        }
    }

    /// True when the root cause is a failed factorization.
    pub fn is_numerical(&self) -> bool {
        match self {
            BnrError::NumericalSingularity { .. } | BnrError::Degenerate(_) => true,
            BnrError::Chain { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, BnrError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid axis partition: {0}")]
    InvalidPartition(String),

    #[error("{0}")]
    Domain(String),

    #[error("exact enumeration needs {needed} items, above the cap of {cap}; use sampled mode or raise the cap")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("balanced partition search failed after {tries} tries; worst block fractions: {detail}")]
    BalancedPartitionFailed { tries: u64, detail: String },

    #[error("greedy symmetrization failed at {0} (hypothesis violated)")]
    SymmetrizationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

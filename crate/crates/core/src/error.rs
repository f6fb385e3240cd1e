use thiserror::Error;

/// Errors shared across the workspace.
#[derive(Debug, Error)]
pub enum Error {
    /// An accumulator or pointwise value would not fit its integer type.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    /// Input outside the documented validity range of an operation or bound.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sieve block exceeding the configured memory budget.
    #[error("requested block of {requested} values exceeds the {limit} limit")]
    BlockTooLarge { requested: u64, limit: u64 },

    /// Requested interval radius is not reachable at the working precision.
    #[error("precision error: {0}")]
    Precision(String),

    /// Checkpoint file does not match the running configuration.
    #[error("checkpoint config-hash mismatch: file has {found}, run has {expected}")]
    CheckpointConfig { found: String, expected: String },

    /// Stored seed disagrees with an independent recomputation.
    #[error("checkpoint seed mismatch at x={x}: stored {stored}, recomputed {recomputed}")]
    CheckpointSeed { x: u64, stored: u128, recomputed: u128 },

    /// Malformed or truncated checkpoint data.
    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    /// The Gram matrix of the selected sub-channel is numerically singular.
    /// Callers resample the realization.
    #[error("singular channel: condition estimate {condition:.3e} exceeds cap")]
    SingularChannel { condition: f64 },

    #[error("relay {0} is a selected relay, not a non-selected one")]
    NotANonSelectedRelay(usize),

    #[error("pair denominator symbol magnitude {magnitude:.3e} is below the floor")]
    DegenerateSymbol { magnitude: f64 },

    /// All other selected relays have zero second-hop gain.
    #[error("selected relay {0} has no competing relay energy; rate is unbounded")]
    LoneRelayDegenerate(usize),

    /// Effective first-hop vector of a non-selected relay is parallel to the
    /// second-hop vector, so its high-SNR rate is unbounded.
    #[error("effective channel and second-hop vector are parallel")]
    ParallelVectors,

    #[error("insufficient data for slope fit: {usable} usable points (need {required})")]
    InsufficientData { usable: usize, required: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

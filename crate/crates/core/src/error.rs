//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("malformed decomposition: {0}")]
    MalformedDecomposition(String),

    #[error("window index {index} is not valid for a block of size {size}")]
    WindowOutOfRange { index: usize, size: usize },

    #[error("selection shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("red and white sets are not disjoint: both contain vertex {0}")]
    RedWhiteOverlap(crate::Vertex),

    #[error("cycle type {cycle_type} moves {needed} labels but only {available} are available")]
    TypeTooLarge {
        cycle_type: String,
        needed: usize,
        available: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("vertex {vertex} is not in edge {edge}")]
    VertexNotInEdge { vertex: crate::Vertex, edge: usize },

    #[error("{space} has {count} states, exceeding the cap of {cap}: undecided at cap")]
    StateCapExceeded {
        space: String,
        count: u128,
        cap: u128,
    },

    #[error(
        "{chain} is reducible; the model fails the irreducibility requirement \
         (the interchange process must be irreducible for every particle count)"
    )]
    Reducible { chain: String },

    #[error("time out of range: {0}")]
    TimeOutOfRange(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input file could not be parsed. Lines are 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A variable name does not resolve.
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    /// A vertex id is valid for the universe but absent from this graph.
    #[error("vertex `{0}` is not in the graph")]
    VertexNotPresent(String),

    /// An edge operation referenced an edge the graph does not contain.
    #[error("edge `{0}` is not in the graph")]
    EdgeAbsent(String),

    /// A precondition on an operation's arguments was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A label set failed validation against its graph.
    #[error("invalid label set: {0}")]
    Label(String),

    /// A label set was required to be regular and is not.
    #[error("label set is not regular: {0}")]
    NotRegular(String),

    /// Variable sets of two inputs do not line up.
    #[error("schema mismatch: {0}")]
    Schema(String),

    /// A dense table would exceed the hard cell cap.
    #[error("table of {cells} cells exceeds the cap of {cap} cells")]
    TableTooLarge { cells: u128, cap: u64 },

    /// Evaluation divided by a zero-probability conditioning event.
    #[error("zero-probability conditioning event in {0}")]
    ZeroMass(String),

    /// An internal consistency check failed; this indicates a bug.
    #[error("internal consistency violation: {0}")]
    Internal(String),

    /// Bad benchmark or runtime configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by graph ingestion, scoring and selection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: u64 },

    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: u64, v: u64 },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("block label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("label vector has length {got}, graph has {expected} vertices")]
    LabelLength { expected: usize, got: usize },

    #[error("block state does not match graph: {0}")]
    InconsistentState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

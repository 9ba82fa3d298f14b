use thiserror::Error;

/// Errors raised by the algebra, limit and verifier layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("block count mismatch: expected {expected} blocks, found {found}")]
    BlockCount { expected: usize, found: usize },

    #[error("shape mismatch in block {block}: expected {expected}x{expected}, found {rows}x{cols}")]
    Shape {
        block: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("node {node} lies beyond the chain horizon {horizon}")]
    Horizon { node: usize, horizon: usize },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("coherence violated between `{lower}` and `{upper}`: residual {residual:e}")]
    Coherence {
        lower: String,
        upper: String,
        residual: f64,
    },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

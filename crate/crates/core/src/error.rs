use thiserror::Error;

pub type Result<T> = std::result::Result<T, FlowError>;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),

    #[error("postcondition failed after retries: {0}")]
    Postcondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FlowError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        FlowError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        FlowError::Domain(message.into())
    }
}

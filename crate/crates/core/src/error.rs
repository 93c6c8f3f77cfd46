use thiserror::Error;

#[derive(Debug, Error)]
pub enum DpsmError {
    #[error("input is empty")]
    EmptyInput,
    #[error("parse error at row {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list error at line {line}: {message}")]
    Load { line: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph has no edges; density cannot propagate")]
    NoEdges,
    #[error("merge contract violated: {0}")]
    MergeContract(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric undefined: every item is noise")]
    UndefinedMetric,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DpsmError> = std::result::Result<T, E>;

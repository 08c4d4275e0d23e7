use thiserror::Error;

/// Errors raised across the sampling, steering and evaluation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("impossible evidence: observed pattern has zero probability under the model")]
    ImpossibleEvidence,
    #[error("degenerate step: {0}")]
    DegenerateStep(String),
    #[error("degenerate ensemble: all particle weights are zero")]
    DegenerateEnsemble,
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("singular gradient: {0}")]
    SingularGradient(String),
    #[error("non-finite reward value")]
    NonFiniteReward,
    #[error("missing {0}")]
    Missing(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("parity mismatch: even generator {0} mapped to a value with odd terms")]
    ParityMismatch(String),
    #[error("generator {0} is not allowed in {1} mode")]
    IllegalGenerator(String, String),
    #[error("operator shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not linear in the odd variables: {0}")]
    NotLinear(String),
    #[error("not a shadow: linearized-equation residual is nonzero in component {0}")]
    NotAShadow(usize),
    #[error("odd degree mismatch: expected {expected}, found term of degree {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("residual is nonlinear in the undetermined parameters: {0}")]
    NonlinearInParams(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("syntax error at byte {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

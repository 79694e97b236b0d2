use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidSpec(String),
    #[error("simplex stalled after {iterations} iterations")]
    NumericalBreakdown { iterations: usize },
}

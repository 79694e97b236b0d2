use pap_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("set is not permutation invariant")]
    NotPermutationInvariant,
    #[error("vertex list unavailable for this set")]
    VerticesUnavailable,
    #[error("vertex list would exceed {limit} entries")]
    CombinatorialBlowup { limit: usize },
    #[error("scaling vector must be strictly positive")]
    NonPositiveScale,
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("operation needs a linear description of the set")]
    RequiresHRep,
    #[error("no max-plus-sum strategy applies: {0}")]
    StrategyUnavailable(String),
    #[error("structural inequality fails: max-plus-sum {value} exceeds beta {beta}")]
    StructuralInequalityUnverified { value: f64, beta: f64 },
    #[error("algorithm did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("cut cap reached after {cuts} cuts (objective {objective}, max violation {violation})")]
    IterationCapExceeded { cuts: usize, objective: f64, violation: f64 },
    #[error("linear program unexpectedly {0}")]
    LpStatus(&'static str),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is singular")]
    Singular,
    #[error("problem size {size} exceeds the exhaustive limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("feasible set is empty")]
    Infeasible,
    #[error("feasible set is unbounded and the objective is not coercive on it")]
    Unbounded,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("weak duality violated: dual {dual} exceeds primal {primal}")]
    WeakDuality { primal: f64, dual: f64 },
    #[error("iteration limit reached in {0}")]
    IterationLimit(&'static str),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("{0} is not squarefree")]
    NotSquarefree(BigInt),
    #[error("could not decide squarefreeness of {0} within the effort budget")]
    SquarefreeUnresolved(BigInt),
    #[error("operands belong to different fields")]
    MixedFields,
    #[error("element is zero")]
    ZeroElement,
    #[error("element is not totally positive")]
    NotTotallyPositive,
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("first element must be 1")]
    FirstElementNotOne,
    #[error("no generator of norm {0} found")]
    NoGeneratorFound(BigInt),
    #[error("{0} is a perfect square")]
    PerfectSquare(BigInt),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("q_l*t + u is odd")]
    ParityViolation,
    #[error("candidate window is empty")]
    EmptyWindow,
    #[error("zero input")]
    ZeroInput,
    #[error("unresolved factorization at n = {0}")]
    UnresolvedFactorization(BigInt),
    #[error("modulus {0} is not squarefree")]
    NonSquarefreeModulus(u64),
    #[error("invalid sieve spec: {0}")]
    InvalidSpec(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("leading minor of size {size} is not totally positive")]
    NotTotallyPositiveDefinite { size: usize },
    #[error("target is already represented")]
    AlreadyRepresented,
    #[error("invalid queue: {0}")]
    QueueInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the exact evaluators.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("base q must be at least 2, got {0}")]
    BaseTooSmall(usize),
    #[error("permutation table has length {got}, expected q = {expected}")]
    TableLength { expected: usize, got: usize },
    #[error("permutation is not a bijection: {0}")]
    NotABijection(String),
    #[error("sigma^q is not the identity: sigma^q({point}) = {image}")]
    OrderViolation { point: usize, image: usize },
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("invalid q-adic value: {0}")]
    InvalidPoint(String),
    #[error("q and the operand's base disagree ({expected} vs {got})")]
    BaseMismatch { expected: usize, got: usize },
    #[error("multi-index must have length q-1 = {expected}, got {got}")]
    MultiIndexLength { expected: usize, got: usize },
    #[error("multi-index has total order 0")]
    EmptyMultiIndex,
    #[error("digit {digit} out of range for this operation (q = {q})")]
    DigitOutOfRange { digit: usize, q: usize },
    #[error("level {level} at q = {q} exceeds the table cap of 2^20 cells")]
    LevelCapExceeded { q: usize, level: u32 },
    #[error("combinatorial guard exceeded: {terms} terms > {limit}")]
    CombinatorialGuard { terms: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Cap violations are reported separately from malformed input by the CLI.
    pub fn is_cap_violation(&self) -> bool {
        matches!(
            self,
            Error::LevelCapExceeded { .. } | Error::CombinatorialGuard { .. }
        )
    }
}

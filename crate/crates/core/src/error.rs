use thiserror::Error;

/// Errors raised by the arithmetic, polynomial and protocol layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of range: must satisfy 2 <= p < 2^31")]
    ModulusOutOfRange(u64),
    #[error("incompatible moduli: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("no inverse: zero has no multiplicative inverse")]
    NoInverse,
    #[error("substitution does not cover variable x{0}")]
    UncoveredVariable(u32),
    #[error("polynomial is not univariate in x{var}: extra variables {extra:?}")]
    NotUnivariate { var: u32, extra: Vec<u32> },
    #[error("operation undefined on the zero polynomial")]
    ZeroPolynomial,
    #[error("H must be nonempty")]
    EmptyEvaluationSet,
    #[error("H contains duplicate element {0}")]
    DuplicateEvaluationPoint(u64),
    #[error("H size {size} not invertible modulo {modulus}")]
    HSizeNotInvertible { size: usize, modulus: u64 },
    #[error("schedule variables are not distinct (x{0} repeated)")]
    DuplicateScheduleVariable(u32),
    #[error("schedule does not cover polynomial variables {0:?}")]
    ScheduleDoesNotCover(Vec<u32>),
    #[error("prover precondition violated: {0}")]
    ProverPrecondition(String),
    #[error("enumeration budget exceeded: {needed} > {budget}; use monte_carlo_acceptance / --mode mc")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("invalid document: {0}")]
    Document(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

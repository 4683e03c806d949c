use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision must carry at least one digit")]
    ZeroPrecision,
    #[error("operands live in different p-adic contexts")]
    ContextMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cancellation left no significant digits")]
    PrecisionExhausted,
    #[error("{0}: argument outside the convergence domain")]
    Domain(&'static str),
    #[error("cannot parse p-adic literal: {0}")]
    Parse(String),

    #[error("index {0} is not a valid sequence index (indices start at 1)")]
    BadIndex(usize),
    #[error("tail bound p^-{tail} is larger than the explicit sup norm")]
    TailAboveSupport { tail: i64 },
    #[error("tail bound p^-{tail} would contaminate precision {precision}")]
    TailTooFat { tail: i64, precision: i64 },

    #[error("vertex {0} has no successors inside the tree")]
    OutOfTree(usize),
    #[error("depth {requested} exceeds tree depth {depth}")]
    DepthOutOfRange { requested: usize, depth: usize },
    #[error("tree order must be at least 1")]
    BadOrder,

    #[error("coupling norm out of range: need 0 < |J|_p < p^(-1/(p-1))")]
    CouplingOutOfRange,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("weight violates max_i |lambda(i)/lambda(0)|_p < 1")]
    ConditionL1Violated,
    #[error("denominator X + theta is not a unit")]
    SingularDenominator,
    #[error("fixed-point iteration did not converge within {0} steps")]
    NonConvergence(usize),

    #[error("state space of {0} configurations exceeds the enumeration budget of {1}")]
    StateSpaceTooLarge(String, u64),
    #[error("unknown suite `{0}`; expected one of exp-log, contraction, example, compatibility, partition, boundedness, continuity, limit, cascade, all")]
    UnknownSuite(String),
    #[error("compatibility needs depth >= 2, got {0}")]
    CompatibilityDepth(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

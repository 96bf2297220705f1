use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("d must be a squarefree integer >= 2, got {0}")]
    InvalidField(i64),
    #[error("field Q(sqrt({0})) not certified narrow-class-one with norm -1 unit: need d = 1 mod 4, a fundamental unit of norm -1, and totally positive generators for all small primes")]
    NotCertified(i64),
    #[error("ideal of norm {0} has no totally positive generator; field is not narrow class number one")]
    NotNarrowClassOne(i64),
    #[error("zero ideal")]
    ZeroIdeal,
    #[error("element is not an algebraic integer")]
    NotIntegral,
    #[error("element is not totally positive")]
    NotTotallyPositive,
    #[error("weight must be a positive even integer, got {0}")]
    OddWeight(i64),
    #[error("operands belong to different fields (d = {0} vs d = {1})")]
    ContextMismatch(i64, i64),
    #[error("weight mismatch: {0} vs {1}")]
    WeightMismatch(i64, i64),
    #[error("coefficient discriminants {0} and {1} cannot be mixed")]
    CoeffDiscMismatch(i64, i64),
    #[error("expansion bound {have} is smaller than required bound {need}")]
    BoundTooSmall { have: i64, need: i64 },
    #[error("basis is rank deficient at weight {0}")]
    BasisRankDeficient(i64),
    #[error("unsupported dimension {dim} at weight {weight}")]
    UnsupportedDimension { weight: i64, dim: usize },
    #[error("cannot conclude: {0}")]
    Inconclusive(String),
    #[error("expansion is not cuspidal")]
    NotCuspidal,
    #[error("cache entry is corrupt or does not match its digest: {0}")]
    CacheCorruption(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

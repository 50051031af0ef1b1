//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field size {q} exceeds the table bound {bound}")]
    FieldTooLarge { q: u128, bound: u64 },
    #[error("zero has no discrete logarithm")]
    ZeroElement,
    #[error("prime {p} is bad: {reason}")]
    BadPrime { p: u64, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters are not disjoint modulo Z")]
    NotDisjoint,
    #[error("q = {q} is not splittable for these parameters")]
    NotSplittable { q: u64 },
    #[error("parameters are not defined over Q")]
    NotRational,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("non-integral coefficient: {0}")]
    NonIntegral(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("cache format: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotPrime(_) => "not_prime",
            Error::ZeroDegree => "zero_degree",
            Error::FieldTooLarge { .. } => "field_too_large",
            Error::ZeroElement => "zero_element",
            Error::BadPrime { .. } => "bad_prime",
            Error::InvalidParams(_) => "invalid_params",
            Error::NotDisjoint => "not_disjoint",
            Error::NotSplittable { .. } => "not_splittable",
            Error::NotRational => "not_rational",
            Error::Precondition(_) => "precondition",
            Error::Precision(_) => "precision",
            Error::Budget(_) => "budget_exceeded",
            Error::NonIntegral(_) => "non_integral",
            Error::Mismatch(_) => "mismatch",
            Error::Internal(_) => "internal",
            Error::Cache(_) => "cache_format",
            Error::Io(_) => "io",
        }
    }

    /// The pipeline stage an error most naturally belongs to.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::NotPrime(_)
            | Error::ZeroDegree
            | Error::FieldTooLarge { .. }
            | Error::ZeroElement
            | Error::Cache(_)
            | Error::Io(_) => "finitefield",
            Error::Precision(_) => "charsums",
            Error::InvalidParams(_)
            | Error::NotDisjoint
            | Error::NotSplittable { .. }
            | Error::NotRational => "hypergeom",
            Error::BadPrime { .. } => "pencils",
            Error::NonIntegral(_) | Error::Mismatch(_) => "zeta",
            Error::Precondition(_) | Error::Budget(_) | Error::Internal(_) => "core",
        }
    }
}

use thiserror::Error;

/// Errors shared across the algebra modules.
///
/// Truncation and depth violations are loud failures by design: operations
/// never drop terms silently, they tell the caller which bound to raise.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("scalar {value} is not {p}-local (negative {p}-adic valuation)")]
    NonPLocal { value: String, p: u64 },
    #[error("weight {weight} exceeds weight bound {bound}; raise --weight-bound")]
    TruncationOverflow { weight: u32, bound: u32 },
    #[error("delta depth {needed} exceeds depth bound {bound}; raise --depth-bound")]
    DepthExceeded { needed: u32, bound: u32 },
    #[error("element has a weight-0 monomial, so it does not lie in the divided-power ideal")]
    NotInIdeal,
    #[error("operation is undefined on the zero element")]
    ZeroElement,
    #[error("delta is undefined over a prime field (it divides by p)")]
    DeltaOverPrimeField,
    #[error("unknown variable {0:?} in this context")]
    UnknownVariable(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

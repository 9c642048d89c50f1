//! Error taxonomy for the whole library.
//!
//! Three families of failure, kept distinct so callers (the CLI in
//! particular) can map them to exit codes:
//!
//! * malformed input (unparseable operands, bad law files, non-prime
//!   moduli): [`Error::Parse`], [`Error::InvalidLaw`], [`Error::NotPrime`],
//!   plus the IO/JSON wrappers;
//! * mathematical refusals (a law fails validation, a Poisson table fails a
//!   check, a computation would need coefficients beyond the truncation
//!   cap): [`Error::CapExceeded`], [`Error::LevelEscape`],
//!   [`Error::NotTriangular`], [`Error::NonTerminating`],
//!   [`Error::CheckFailed`];
//! * internal invariant violations, which are bugs and panic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operand, word, or other textual input did not parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A custom law file or law construction request is structurally bad
    /// (missing coordinates, non-contiguous blocks, nonzero constant term,
    /// wrong linear part, and so on).
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    /// A modulus that is not a prime number.
    #[error("{0} is not prime")]
    NotPrime(u64),

    /// A computation needed a series coefficient of total degree above the
    /// truncation cap. Raising --cap (or removing an unsafe override)
    /// resolves this.
    #[error("degree {needed} exceeds the truncation cap {cap}: {context}")]
    CapExceeded { needed: u64, cap: u64, context: String },

    /// A distribution product or antipode produced a basis index outside
    /// the current level box. Impossible for a law that satisfies the
    /// validation axioms; reported rather than silently truncated.
    #[error("result escapes level {r_max} (digit bound {bound}): {context}")]
    LevelEscape { r_max: u32, bound: u32, context: String },

    /// The additive-to-multiplicative basis change found a non-unit or
    /// out-of-order leading coefficient, so back-substitution cannot
    /// proceed.
    #[error("basis change not triangular: {0}")]
    NotTriangular(String),

    /// A rewrite step produced a word that does not strictly decrease the
    /// termination measure. Happens only for tables violating the strong
    /// filtration bound; reported instead of looping forever.
    #[error("rewrite step does not decrease the termination measure: {0}")]
    NonTerminating(String),

    /// A validation or table check that gates a larger operation failed.
    /// Carries the check name and a witness.
    #[error("{check} failed: {witness}")]
    CheckFailed { check: String, witness: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by malformed input, as opposed to
    /// mathematically meaningful refusals.
    #[must_use]
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::InvalidLaw(_) | Error::NotPrime(_) | Error::Io(_) | Error::Json(_)
        )
    }
}

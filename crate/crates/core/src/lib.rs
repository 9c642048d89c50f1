//! Exact computer algebra for distribution algebras of formal group laws
//! over prime fields.
//!
//! The pipeline, bottom to top:
//!
//! 1. [`arith`]: F_p scalars, p-adic digit combinatorics, graded-lex
//!    multi-indices.
//! 2. [`series`]: truncated multivariate power series with exact
//!    cap-bounded arithmetic.
//! 3. [`group`]: formal group laws given by per-coordinate
//!    comultiplication series, with builtin additive, multiplicative, and
//!    mixed two-coordinate laws, block structure, products, custom laws
//!    from JSON, axiom validation, and inverse series.
//! 4. [`dist`]: the distribution algebra of a law at a fixed Frobenius
//!    level: additive-basis products dual to the comultiplication,
//!    comultiplication and counit dual to the product, the multiplicative
//!    (divided-power word) basis and the triangular basis change, Frobenius
//!    powers, commutators, and the antipode.
//! 5. [`rewrite`]: straightening rewrite systems on generator words, PBW
//!    normal forms with a termination measure checked at runtime, and
//!    S-polynomial confluence reports.
//! 6. [`poisson`]: the canonical Poisson-like structure on the splay of
//!    commutative blocks: table extraction, the biderivation extension,
//!    and the four structural checks (skew/constants, Jacobi, strong
//!    filtration, strong multiplicativity).
//! 7. [`reconstruct`]: rebuilding the noncommutative algebra from
//!    commutative block data plus a Poisson table, verifying the rebuilt
//!    bialgebra, comparing against the direct construction, and the
//!    block-order-swap equivalence.

pub mod arith;
pub mod dist;
pub mod error;
pub mod group;
pub mod poisson;
pub mod reconstruct;
pub mod report;
pub mod rewrite;
pub mod series;

pub use error::{Error, Result};

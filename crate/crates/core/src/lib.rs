//! Exact symbolic algebra for divided-power algebras, delta-rings,
//! non-completed prismatic envelopes and PD de Rham complexes, at truncated
//! desk-scale precision. All arithmetic is exact; every verification is an
//! equality of normalized rationals or prime-field elements.
//!
//! Modules:
//! - [`scalars`]: big rationals, p-adic valuation, prime fields, and the
//!   combinatorial coefficients of divided-power calculus;
//! - [`exactla`]: exact row reduction, kernels and solves over Q and F_p,
//!   plus a p-local solver for lattice membership;
//! - [`dpalg`]: sparse divided-power algebras Gamma_{R[X]}(Y) with their
//!   PD/adic/conjugate filtrations;
//! - [`deltaring`]: free delta-rings, the delta operator, Frobenius and
//!   substitution, with the explicit delta identities;
//! - [`prismenv`]: non-completed prismatic envelopes, standard-monomial
//!   rewriting mod (d, p), and the Hodge-Tate comparison;
//! - [`derham`]: PD de Rham complexes, weight-graded cohomology, and the
//!   inverse Cartier map;
//! - [`verify`]: the lemma-keyed suites driven by the CLI and the
//!   acceptance tests.

pub mod deltaring;
pub mod derham;
pub mod dpalg;
pub mod error;
pub mod exactla;
pub(crate) mod monomial;
pub mod prismenv;
pub mod report;
pub mod scalars;
pub mod verify;

pub use error::{AlgebraError, Result};
pub use report::{FiltrationLevel, FiltrationReport};
pub use scalars::{ExactScalar, PrimeContext, ScalarDomain, Valuation};

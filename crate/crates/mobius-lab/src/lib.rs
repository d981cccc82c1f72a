//! Truncated-matrix laboratory for operators on diagonal reproducing kernel
//! Hilbert spaces over the unit disc: weighted shifts, multiplication and
//! composition operators, the Möbius functional calculus, the jet
//! construction, and Möbius-boundedness / weak-homogeneity diagnostics.
//!
//! Operators are represented in the orthonormalized monomial basis
//! e_n = zⁿ√b_n, so their norms are spectral norms of plain matrices and every
//! truncation yields a certified lower bound.

// Negated float comparisons are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod jet;
pub mod kernels;
pub mod mobius;
pub mod operators;
pub mod par;
pub mod scalar;
pub mod series;
pub mod trend;
pub mod verdict;

pub use error::{Error, Result};
pub use kernels::{DiagonalKernel, KernelSpec};
pub use mobius::MobiusMap;
pub use operators::TruncatedOperator;
pub use series::PowerSeries;
pub use verdict::{Classification, Verdict};

//! Symbolic algebra of polynomial field functionals with Poisson and
//! quantum brackets, plus numeric oracles on a lattice and along
//! classical characteristics.

pub mod error;
pub mod lattice;
pub mod parser;
pub mod poisson;
pub mod quantum;
pub mod quasiclassics;
pub mod random;
pub mod scalar;
pub mod suite;
pub mod term;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::{Rational, Real, Scalar};

/// Symbol with exact rational coefficients.
pub type Symbol = term::Symbol<Rational>;
pub type Term = term::Term<Rational>;

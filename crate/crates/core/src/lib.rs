//! Separation of variables for the antiperiodic spin-1/2 XXZ chain.
//!
//! The crate builds the monodromy matrix and transfer matrices of the
//! inhomogeneous chain as dense operators, constructs Sklyanin's SOV bases,
//! computes the complete spectrum of the antiperiodic transfer matrix from a
//! discrete system of quadratic equations, and evaluates scalar products and
//! form factors of local operators as determinants. Every closed formula can
//! be cross-checked against brute-force linear algebra from [`oracle`].

pub mod cli;
pub mod json;
pub mod laurent;
pub mod observables;
pub mod operators;
pub mod oracle;
pub mod params;
pub mod sov;
pub mod spectrum;

pub use num_complex::Complex64;

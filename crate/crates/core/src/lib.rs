//! Security-constrained unit commitment by successive fixing.
//!
//! The pipeline builds the three-binary SCUC MILP, solves LP relaxations with
//! a Halpern–Peaceman–Rachford first-order method, fixes confidently rounded
//! commitment triples that respect the on/off logic, presolves, and finishes
//! with branch-and-bound. A transmission-filtering outer loop adds only the
//! flow limits that are actually violated.

pub mod backend;
pub mod bb;
pub mod driver;
pub mod fixing;
pub mod formulation;
pub mod hprlp;
pub mod instance;
pub mod kernel;
pub mod lp;
pub mod presolve;
pub mod scalar;
pub mod simplex;

pub use scalar::{Precision, Scalar};

/// Double-precision sparse matrix.
pub type SparseMatrixF64 = kernel::SparseMatrix<f64>;
/// Single-precision sparse matrix.
pub type SparseMatrixF32 = kernel::SparseMatrix<f32>;

//! Precision-generic sparse linear algebra used by the first-order solver.

mod power;
mod sparse;
mod vector;

pub use power::{power_method, PowerEstimate, POWER_SAFETY_FACTOR};
pub use sparse::SparseMatrix;
pub use vector::{
    axpby, clamp_into, dot, norm2, norm_inf, project_box, project_box_into, project_nonneg,
    project_nonneg_into,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfBounds { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("power method needs a nonzero matrix")]
    ZeroMatrix,
}

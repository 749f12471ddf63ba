//! Linear programs in the form `min μᵀx  s.t.  A x ≥ θ (or = θ row-wise), x^L ≤ x ≤ x^U`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{KernelError, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    /// `aᵀx ≥ θ`; the row dual is sign-constrained to `y ≥ 0`.
    Ge,
    /// `aᵀx = θ`; the row dual is free.
    Eq,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{what}: expected length {expected}, found {found}")]
    Length { what: &'static str, expected: usize, found: usize },
    #[error("column {col}: lower bound {lower} exceeds upper bound {upper}")]
    CrossedBounds { col: usize, lower: f64, upper: f64 },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLp {
    pub a: SparseMatrix<f64>,
    /// θ
    pub rhs: Vec<f64>,
    /// μ
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub sense: Vec<RowSense>,
    /// Constant added to `μᵀx` when reporting objective values.
    pub obj_offset: f64,
}

impl StandardFormLp {
    pub fn new(
        a: SparseMatrix<f64>,
        rhs: Vec<f64>,
        cost: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        sense: Vec<RowSense>,
    ) -> Result<Self, LpError> {
        let lp = Self { a, rhs, cost, lower, upper, sense, obj_offset: 0.0 };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        let lens = [
            ("rhs", m, self.rhs.len()),
            ("sense", m, self.sense.len()),
            ("cost", n, self.cost.len()),
            ("lower", n, self.lower.len()),
            ("upper", n, self.upper.len()),
        ];
        for (what, expected, found) in lens {
            if expected != found {
                return Err(LpError::Length { what, expected, found });
            }
        }
        for (i, v) in self.rhs.iter().enumerate() {
            if !v.is_finite() {
                return Err(LpError::NonFinite { what: "rhs", index: i });
            }
        }
        for j in 0..n {
            if !self.cost[j].is_finite() {
                return Err(LpError::NonFinite { what: "cost", index: j });
            }
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::CrossedBounds { col: j, lower: self.lower[j], upper: self.upper[j] });
            }
        }
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    /// `μᵀx + offset`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.obj_offset
    }

    pub fn activity(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec(x).expect("activity: dimension")
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        let rows = act.iter().zip(&self.rhs).zip(&self.sense).map(|((a, r), s)| match s {
            RowSense::Ge => (r - a).max(0.0),
            RowSense::Eq => (a - r).abs(),
        });
        let bounds = x
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((v, l), u)| (l - v).max(v - u).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Index of the row with the largest violation, with that violation.
    pub fn worst_row(&self, x: &[f64]) -> Option<(usize, f64)> {
        let act = self.activity(x);
        act.iter()
            .zip(&self.rhs)
            .zip(&self.sense)
            .map(|((a, r), s)| match s {
                RowSense::Ge => (r - a).max(0.0),
                RowSense::Eq => (a - r).abs(),
            })
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn num_equalities(&self) -> usize {
        self.sense.iter().filter(|s| **s == RowSense::Eq).count()
    }
}

/// Incremental construction of a [`StandardFormLp`].
#[derive(Debug, Default, Clone)]
pub struct LpBuilder {
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    sense: Vec<RowSense>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    obj_offset: f64,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_col(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn set_cost(&mut self, col: usize, cost: f64) {
        self.cost[col] = cost;
    }

    pub fn add_offset(&mut self, delta: f64) {
        self.obj_offset += delta;
    }

    /// `Σ coef·x ≥ rhs`.
    pub fn add_ge(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        self.push_row(entries, RowSense::Ge, rhs, 1.0)
    }

    /// `Σ coef·x ≤ rhs`, stored negated as a `≥` row.
    pub fn add_le(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        self.push_row(entries, RowSense::Ge, rhs, -1.0)
    }

    pub fn add_eq(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        self.push_row(entries, RowSense::Eq, rhs, 1.0)
    }

    fn push_row(&mut self, entries: &[(usize, f64)], sense: RowSense, rhs: f64, sign: f64) -> usize {
        let i = self.rhs.len();
        self.triplets.extend(entries.iter().map(|&(j, v)| (i, j, sign * v)));
        self.rhs.push(sign * rhs);
        self.sense.push(sense);
        i
    }

    pub fn build(self) -> Result<StandardFormLp, LpError> {
        let a = SparseMatrix::from_triplets(self.rhs.len(), self.cost.len(), &self.triplets)?;
        let mut lp = StandardFormLp::new(a, self.rhs, self.cost, self.lower, self.upper, self.sense)?;
        lp.obj_offset = self.obj_offset;
        Ok(lp)
    }
}

//! Sparse matrix kept in both compressed-row and compressed-column layout.
//!
//! `A x` walks the rows, `Aᵀ y` walks the columns, so both products are
//! gather-only loops that parallelize over output entries without atomics.

use rayon::prelude::*;

use super::KernelError;
use crate::scalar::Scalar;

/// Above this many nonzeros the products are split across the rayon pool.
const PAR_NNZ: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    row_vals: Vec<T>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    col_vals: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicates are summed, entries that end up exactly zero are dropped and
    /// indices come out sorted in both layouts.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, KernelError> {
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(KernelError::IndexOutOfBounds { row: i, col: j, nrows, ncols });
            }
            if !v.is_finite() {
                return Err(KernelError::NonFinite { row: i, col: j });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|a| (a.0, a.1));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Ok(Self::from_sorted_entries(nrows, ncols, &merged))
    }

    /// Builds a matrix from a dense row-major array, skipping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, KernelError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(KernelError::DimensionMismatch {
                    what: "dense row length",
                    expected: ncols,
                    found: row.len(),
                });
            }
            triplets.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (i, j, *v)));
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        let entries: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_sorted_entries(n, n, &entries)
    }

    fn from_sorted_entries(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let nnz = entries.len();
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(nnz);
        let mut row_vals = Vec::with_capacity(nnz);
        let mut col_counts = vec![0usize; ncols + 1];
        for &(i, j, v) in entries {
            row_ptr[i + 1] += 1;
            col_counts[j + 1] += 1;
            col_idx.push(j as u32);
            row_vals.push(T::from_wide(v));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..ncols {
            col_counts[j + 1] += col_counts[j];
        }
        let col_ptr = col_counts.clone();
        let mut next = col_counts;
        let mut row_idx = vec![0u32; nnz];
        let mut col_vals = vec![T::zero(); nnz];
        // entries are row-major sorted, so each column receives increasing rows
        for &(i, j, v) in entries {
            let slot = next[j];
            row_idx[slot] = i as u32;
            col_vals[slot] = T::from_wide(v);
            next[j] += 1;
        }
        Self { nrows, ncols, row_ptr, col_idx, row_vals, col_ptr, row_idx, col_vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().zip(&self.row_vals[span]).map(|(&j, &v)| (j as usize, v))
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[span.clone()].iter().zip(&self.col_vals[span]).map(|(&i, &v)| (i as usize, v))
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    /// Row-major `(row, col, value)` listing in `f64`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v.wide()))).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            dense[i][j] = v;
        }
        dense
    }

    /// Re-rounds the stored values into another precision.
    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::from_wide(x.wide())).collect::<Vec<U>>();
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            row_vals: conv(&self.row_vals),
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            col_vals: conv(&self.col_vals),
        }
    }

    /// `A ← diag(row) · A · diag(col)` applied to both layouts.
    pub fn scale(&mut self, row: &[f64], col: &[f64]) {
        assert_eq!(row.len(), self.nrows);
        assert_eq!(col.len(), self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k] as usize;
                self.row_vals[k] = T::from_wide(self.row_vals[k].wide() * row[i] * col[j]);
            }
        }
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k] as usize;
                self.col_vals[k] = T::from_wide(self.col_vals[k].wide() * row[i] * col[j]);
            }
        }
    }

    pub fn row_abs_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v.wide().abs()).sum()).collect()
    }

    pub fn col_abs_sums(&self) -> Vec<f64> {
        (0..self.ncols).map(|j| self.col(j).map(|(_, v)| v.wide().abs()).sum()).collect()
    }

    pub fn row_max_abs(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).fold(0.0, |m, (_, v)| f64::max(m, v.wide().abs()))).collect()
    }

    pub fn col_max_abs(&self) -> Vec<f64> {
        (0..self.ncols).map(|j| self.col(j).fold(0.0, |m, (_, v)| f64::max(m, v.wide().abs()))).collect()
    }

    /// Ratio of the largest to the smallest nonzero magnitude (1 when empty).
    pub fn coefficient_range(&self) -> f64 {
        let (lo, hi) = self.row_vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            let a = v.wide().abs();
            (lo.min(a), hi.max(a))
        });
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Frobenius norm, an upper bound on the spectral norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.row_vals.iter().map(|v| v.wide() * v.wide()).sum::<f64>().sqrt()
    }

    /// `A x`, checked.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, KernelError> {
        check_len("matvec input", self.ncols, x.len())?;
        let mut out = vec![T::zero(); self.nrows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `Aᵀ y`, checked.
    pub fn matvec_t(&self, y: &[T]) -> Result<Vec<T>, KernelError> {
        check_len("matvec_t input", self.nrows, y.len())?;
        let mut out = vec![T::zero(); self.ncols];
        self.matvec_t_into(y, &mut out);
        Ok(out)
    }

    /// `out = A x` through the row layout. Panics on dimension mismatch.
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "matvec: input length");
        assert_eq!(out.len(), self.nrows, "matvec: output length");
        gather(&self.row_ptr, &self.col_idx, &self.row_vals, x, out, self.nnz());
    }

    /// `out = Aᵀ y` through the column layout. Panics on dimension mismatch.
    pub fn matvec_t_into(&self, y: &[T], out: &mut [T]) {
        assert_eq!(y.len(), self.nrows, "matvec_t: input length");
        assert_eq!(out.len(), self.ncols, "matvec_t: output length");
        gather(&self.col_ptr, &self.row_idx, &self.col_vals, y, out, self.nnz());
    }

    /// `A x` in `f64` using the column layout (scatter); used to cross-check the layouts.
    pub fn matvec_via_columns(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (j, xj) in x.iter().enumerate().take(self.ncols) {
            for (i, v) in self.col(j) {
                out[i] += v.wide() * xj;
            }
        }
        out
    }

    /// `Aᵀ y` in `f64` using the row layout (scatter).
    pub fn matvec_t_via_rows(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (i, yi) in y.iter().enumerate().take(self.nrows) {
            for (j, v) in self.row(i) {
                out[j] += v.wide() * yi;
            }
        }
        out
    }

    /// Keeps the listed rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_new = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            col_new[j] = k;
        }
        let mut entries = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let mut row: Vec<(usize, usize, f64)> = self
                .row(i)
                .filter(|(j, _)| col_new[*j] != usize::MAX)
                .map(|(j, v)| (r, col_new[j], v.wide()))
                .collect();
            row.sort_unstable_by_key(|e| e.1);
            entries.extend(row);
        }
        Self::from_sorted_entries(rows.len(), cols.len(), &entries)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), KernelError> {
    if expected == found {
        Ok(())
    } else {
        Err(KernelError::DimensionMismatch { what, expected, found })
    }
}

#[inline]
fn gather<T: Scalar>(ptr: &[usize], idx: &[u32], vals: &[T], x: &[T], out: &mut [T], nnz: usize) {
    let body = |(i, o): (usize, &mut T)| {
        let mut acc = 0.0f64;
        for k in ptr[i]..ptr[i + 1] {
            acc += vals[k].wide() * x[idx[k] as usize].wide();
        }
        *o = T::from_wide(acc);
    };
    if nnz >= PAR_NNZ {
        out.par_iter_mut().enumerate().with_min_len(256).for_each(body);
    } else {
        out.iter_mut().enumerate().for_each(body);
    }
}

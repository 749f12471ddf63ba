//! Dense two-phase bounded-variable simplex.
//!
//! Intended for small problems: reference objectives in tests and the
//! `simplex-oracle` LP backend. Every row gets a slack (`≥` rows) and an
//! artificial; columns without a finite lower bound are mirrored or split so
//! that every internal column has one.

use serde::{Deserialize, Serialize};

use crate::lp::{RowSense, StandardFormLp};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `μ − Aᵀy`.
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Image of an original column among the internal ones.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    Direct(usize),
    Mirrored(usize),
    Split(usize, usize),
}

#[derive(Default)]
struct InternalCols {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m × ncols`, equal to `B⁻¹ A`.
    t: Vec<f64>,
    /// Reduced costs.
    d: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` otherwise.
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    value: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                self.d.iter_mut().zip(row).for_each(|(d, a)| *d -= cb * a);
            }
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if !self.at_upper[j] && dj < -COST_EPS {
                1.0
            } else if self.at_upper[j] && dj > COST_EPS {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if pick.is_none_or(|(p, _)| dj.abs() > self.d[p].abs()) {
                pick = Some((j, dir));
            }
        }
        pick
    }

    /// Runs simplex iterations on the current costs.
    fn optimize(&mut self, max_iter: usize) -> SimplexStatus {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= max_iter {
                return SimplexStatus::IterationLimit;
            }
            let Some((j, dir)) = self.entering(degenerate >= DEGENERATE_SWITCH) else {
                return SimplexStatus::Optimal;
            };
            self.iterations += 1;

            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.m {
                let a = self.entry(r, j) * dir;
                let b = self.basis[r];
                let limit = if a > PIVOT_EPS {
                    ((self.value[b] - self.lo[b]) / a, false)
                } else if a < -PIVOT_EPS && self.hi[b].is_finite() {
                    ((self.hi[b] - self.value[b]) / -a, true)
                } else {
                    continue;
                };
                let lim = limit.0.max(0.0);
                let better = match leave {
                    None => lim < step,
                    Some((p, _)) => lim < step || (lim == step && self.basis[r] < self.basis[p]),
                };
                if better {
                    step = lim;
                    leave = Some((r, limit.1));
                }
            }
            if !step.is_finite() {
                return SimplexStatus::Unbounded;
            }
            degenerate = if step <= PIVOT_EPS { degenerate + 1 } else { 0 };

            for r in 0..self.m {
                let a = self.entry(r, j);
                if a != 0.0 {
                    let b = self.basis[r];
                    self.value[b] -= dir * step * a;
                }
            }
            self.value[j] += dir * step;

            match leave {
                None => self.at_upper[j] = dir > 0.0,
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.value[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                    self.at_upper[out] = to_upper;
                    self.row_of[out] = usize::MAX;
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.entry(r, j);
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a -= f * b);
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            self.d.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a -= f * b);
            self.d[j] = 0.0;
        }
        self.basis[r] = j;
        self.row_of[j] = r;
    }
}

/// Solves `lp` to optimality, or reports why it could not.
pub fn solve_simplex(lp: &StandardFormLp, max_iter: usize) -> SimplexSolution {
    let (m, n) = (lp.num_rows(), lp.num_cols());

    let mut maps = Vec::with_capacity(n);
    let mut ic = InternalCols::default();
    let push = |ic: &mut InternalCols, l: f64, h: f64, c: f64, col: Vec<(usize, f64)>| {
        ic.lo.push(l);
        ic.hi.push(h);
        ic.cost.push(c);
        ic.cols.push(col);
        ic.lo.len() - 1
    };
    for j in 0..n {
        let col: Vec<(usize, f64)> = lp.a.col(j).collect();
        let neg: Vec<(usize, f64)> = col.iter().map(|&(i, v)| (i, -v)).collect();
        let (l, u, c) = (lp.lower[j], lp.upper[j], lp.cost[j]);
        let map = if l.is_finite() {
            ColMap::Direct(push(&mut ic, l, u, c, col))
        } else if u.is_finite() {
            ColMap::Mirrored(push(&mut ic, -u, f64::INFINITY, -c, neg))
        } else {
            let p = push(&mut ic, 0.0, f64::INFINITY, c, col);
            ColMap::Split(p, push(&mut ic, 0.0, f64::INFINITY, -c, neg))
        };
        maps.push(map);
    }
    for i in 0..m {
        if lp.sense[i] == RowSense::Ge {
            push(&mut ic, 0.0, f64::INFINITY, 0.0, vec![(i, -1.0)]);
        }
    }

    // Nonbasic start at the lower bound; artificials absorb the residual.
    let mut value = ic.lo.clone();
    let mut resid = lp.rhs.clone();
    for (k, col) in ic.cols.iter().enumerate() {
        for &(i, v) in col {
            resid[i] -= v * value[k];
        }
    }
    let first_art = ic.lo.len();
    for (i, r) in resid.iter().enumerate() {
        let s = if *r >= 0.0 { 1.0 } else { -1.0 };
        push(&mut ic, 0.0, f64::INFINITY, 0.0, vec![(i, s)]);
        value.push(r.abs());
    }
    let ncols = ic.lo.len();
    let InternalCols { lo, hi, cost, cols } = ic;

    let mut t = vec![0.0; m * ncols];
    let art_sign: Vec<f64> = resid.iter().map(|r| if *r >= 0.0 { 1.0 } else { -1.0 }).collect();
    for (k, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            // B = diag(sign), so B⁻¹A scales each row by its sign.
            t[i * ncols + k] += v * art_sign[i];
        }
    }
    let mut row_of = vec![usize::MAX; ncols];
    for i in 0..m {
        row_of[first_art + i] = i;
    }
    let mut tab = Tableau {
        m,
        ncols,
        t,
        d: vec![0.0; ncols],
        lo,
        hi,
        basis: (first_art..first_art + m).collect(),
        row_of,
        at_upper: vec![false; ncols],
        value,
        iterations: 0,
    };

    let mut phase1 = vec![0.0; ncols];
    phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
    tab.set_costs(&phase1);
    let status = tab.optimize(max_iter);
    let infeas: f64 = tab.value[first_art..].iter().sum();
    let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let finish = |tab: &Tableau, status: SimplexStatus| -> SimplexSolution {
        let x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                ColMap::Direct(k) => tab.value[k],
                ColMap::Mirrored(k) => -tab.value[k],
                ColMap::Split(p, q) => tab.value[p] - tab.value[q],
            })
            .collect();
        // The artificial column of row i is sign_i·e_i with zero phase-2 cost.
        let y: Vec<f64> = (0..m).map(|i| -tab.d[first_art + i] * art_sign[i]).collect();
        let aty = lp.a.matvec_t(&y).expect("dual length");
        let z = lp.cost.iter().zip(&aty).map(|(c, a)| c - a).collect();
        SimplexSolution { status, objective: lp.objective(&x), x, y, z, iterations: tab.iterations }
    };
    if status == SimplexStatus::IterationLimit {
        return finish(&tab, status);
    }
    if infeas > 1e-9 * scale {
        return finish(&tab, SimplexStatus::Infeasible);
    }

    for k in first_art..ncols {
        tab.hi[k] = 0.0;
        if tab.row_of[k] == usize::MAX {
            tab.value[k] = 0.0;
            tab.at_upper[k] = false;
        }
    }
    let mut phase2 = cost;
    phase2.resize(ncols, 0.0);
    tab.set_costs(&phase2);
    let status = tab.optimize(max_iter);
    finish(&tab, status)
}

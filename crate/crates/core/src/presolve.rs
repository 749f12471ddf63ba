//! Model reductions before an LP or MILP solve.
//!
//! Rules, applied to a fixpoint: activity-based bound tightening (rounded for
//! integer columns, which is what propagates the commitment logic and the
//! minimum up/down windows), detection of redundant, empty and singleton rows,
//! and substitution of columns with equal bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::MilpModel;
use crate::kernel::SparseMatrix;
use crate::lp::{LpError, RowSense, StandardFormLp};

/// Minimum improvement before a bound counts as tightened.
pub const BOUND_EPS: f64 = 1e-9;
const MAX_PASSES: usize = 50;
/// Continuous bounds must improve by this fraction of their range.
const CONTINUOUS_PROGRESS: f64 = 1e-3;
const HUGE: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresolveError {
    #[error("infeasible: row {row:?}, column {col:?}: {detail}")]
    Infeasible { row: Option<usize>, col: Option<usize>, detail: String },
    #[error("point has {found} entries, reduced model has {expected}")]
    LogMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowRemoval {
    Redundant,
    Singleton,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reduction {
    FixedColumn { col: usize, value: f64 },
    RowRemoved { row: usize, reason: RowRemoval },
    BoundTightened { col: usize, lower: (f64, f64), upper: (f64, f64) },
}

/// Everything needed to map between the original and reduced spaces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionLog {
    pub reductions: Vec<Reduction>,
    /// Objective contribution of the substituted columns.
    pub objective_delta: f64,
    pub original_cols: usize,
    pub original_rows: usize,
    /// Reduced column → original column.
    pub col_map: Vec<usize>,
    /// Reduced row → original row.
    pub row_map: Vec<usize>,
    /// Value of every substituted original column.
    pub fixed_values: Vec<Option<f64>>,
}

impl ReductionLog {
    pub fn identity(lp: &StandardFormLp) -> Self {
        Self {
            reductions: Vec::new(),
            objective_delta: 0.0,
            original_cols: lp.num_cols(),
            original_rows: lp.num_rows(),
            col_map: (0..lp.num_cols()).collect(),
            row_map: (0..lp.num_rows()).collect(),
            fixed_values: vec![None; lp.num_cols()],
        }
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed_values.iter().filter(|v| v.is_some()).count()
    }

    pub fn rows_removed(&self) -> usize {
        self.original_rows - self.row_map.len()
    }
}

#[derive(Debug, Clone)]
pub struct Presolved {
    pub lp: StandardFormLp,
    pub integer: Vec<bool>,
    pub log: ReductionLog,
}

impl Presolved {
    pub fn num_free_integers(&self) -> usize {
        (0..self.lp.num_cols()).filter(|&j| self.integer[j] && self.lp.lower[j] < self.lp.upper[j]).count()
    }
}

pub fn milp_presolve(model: &MilpModel) -> Result<Presolved, PresolveError> {
    presolve(&model.lp, &model.integer, true)
}

pub fn lp_presolve(lp: &StandardFormLp) -> Result<Presolved, PresolveError> {
    presolve(lp, &vec![false; lp.num_cols()], false)
}

/// Lifts a reduced-space point to the original space.
pub fn uncrush(point: &[f64], log: &ReductionLog) -> Result<Vec<f64>, PresolveError> {
    if point.len() != log.col_map.len() {
        return Err(PresolveError::LogMismatch { expected: log.col_map.len(), found: point.len() });
    }
    let mut full: Vec<f64> = log.fixed_values.iter().map(|v| v.unwrap_or(0.0)).collect();
    for (k, &j) in log.col_map.iter().enumerate() {
        full[j] = point[k];
    }
    Ok(full)
}

/// Restricts an original-space point to the reduced columns.
pub fn crush(full: &[f64], log: &ReductionLog) -> Result<Vec<f64>, PresolveError> {
    if full.len() != log.original_cols {
        return Err(PresolveError::LogMismatch { expected: log.original_cols, found: full.len() });
    }
    Ok(log.col_map.iter().map(|&j| full[j]).collect())
}

/// Restricts an original-space dual vector to the surviving rows.
pub fn crush_rows(full: &[f64], log: &ReductionLog) -> Result<Vec<f64>, PresolveError> {
    if full.len() != log.original_rows {
        return Err(PresolveError::LogMismatch { expected: log.original_rows, found: full.len() });
    }
    Ok(log.row_map.iter().map(|&i| full[i]).collect())
}

/// Min and max of a row's activity over the box; infinite parts are counted.
#[derive(Debug, Clone, Copy, Default)]
struct Activity {
    min: f64,
    min_inf: usize,
    max: f64,
    max_inf: usize,
    free: usize,
}

struct State<'a> {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: &'a [f64],
    sense: &'a [RowSense],
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer: &'a [bool],
    integral: bool,
    alive: Vec<bool>,
    reductions: Vec<Reduction>,
}

impl State<'_> {
    fn activity(&self, row: &[(usize, f64)], sign: f64) -> Activity {
        let mut act = Activity::default();
        for &(j, a) in row {
            let a = a * sign;
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo < hi {
                act.free += 1;
            }
            let (at_min, at_max) = if a > 0.0 { (lo, hi) } else { (hi, lo) };
            if at_min.is_finite() {
                act.min += a * at_min;
            } else {
                act.min_inf += 1;
            }
            if at_max.is_finite() {
                act.max += a * at_max;
            } else {
                act.max_inf += 1;
            }
        }
        act
    }

    fn infeasible(row: usize, col: Option<usize>, detail: impl Into<String>) -> PresolveError {
        PresolveError::Infeasible { row: Some(row), col, detail: detail.into() }
    }

    /// Visits row `i`; returns whether anything changed.
    fn visit(&mut self, i: usize) -> Result<bool, PresolveError> {
        let row = std::mem::take(&mut self.rows[i]);
        let result = self.visit_row(i, &row);
        self.rows[i] = row;
        result
    }

    fn visit_row(&mut self, i: usize, row: &[(usize, f64)]) -> Result<bool, PresolveError> {
        let theta = self.rhs[i];
        let tol = 1e-8 * (1.0 + theta.abs());
        let act = self.activity(row, 1.0);
        let is_eq = self.sense[i] == RowSense::Eq;

        if act.max_inf == 0 && act.max < theta - tol {
            return Err(Self::infeasible(i, None, format!("max activity {} < {theta}", act.max)));
        }
        if is_eq && act.min_inf == 0 && act.min > theta + tol {
            return Err(Self::infeasible(i, None, format!("min activity {} > {theta}", act.min)));
        }
        let redundant = if is_eq {
            act.free == 0 && act.min_inf == 0 && (act.min - theta).abs() <= tol
        } else {
            act.min_inf == 0 && act.min >= theta - BOUND_EPS
        };
        if redundant || (act.free == 0 && !is_eq) {
            let reason = match act.free {
                0 => RowRemoval::Empty,
                1 => RowRemoval::Singleton,
                _ => RowRemoval::Redundant,
            };
            self.alive[i] = false;
            self.reductions.push(Reduction::RowRemoved { row: i, reason });
            return Ok(true);
        }

        let mut changed = self.tighten(i, row, 1.0, theta, act)?;
        if is_eq {
            let act = self.activity(row, -1.0);
            changed |= self.tighten(i, row, -1.0, -theta, act)?;
        }
        Ok(changed)
    }

    /// Tightens bounds from `sign·(a x) ≥ theta`.
    fn tighten(&mut self, i: usize, row: &[(usize, f64)], sign: f64, theta: f64, act: Activity) -> Result<bool, PresolveError> {
        if act.max_inf > 1 {
            return Ok(false);
        }
        let mut changed = false;
        for &(j, a) in row {
            let a = a * sign;
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo >= hi || a == 0.0 {
                continue;
            }
            let contrib = if a > 0.0 { hi } else { lo };
            let others = if contrib.is_finite() {
                if act.max_inf > 0 {
                    continue;
                }
                act.max - a * contrib
            } else {
                act.max
            };
            let bound = (theta - others) / a;
            if !bound.is_finite() || bound.abs() > HUGE {
                continue;
            }
            let int = self.integral && self.integer[j];
            let progress = |from: f64| {
                if int {
                    BOUND_EPS
                } else {
                    let span = if (hi - lo).is_finite() { hi - lo } else { 1.0 + from.abs() };
                    BOUND_EPS.max(CONTINUOUS_PROGRESS * span)
                }
            };
            let (mut new_lo, mut new_hi) = (lo, hi);
            if a > 0.0 {
                let b = if int { (bound - BOUND_EPS).ceil() } else { bound };
                if b > lo + progress(lo) {
                    new_lo = b;
                }
            } else {
                let b = if int { (bound + BOUND_EPS).floor() } else { bound };
                if b < hi - progress(hi) {
                    new_hi = b;
                }
            }
            if new_lo == lo && new_hi == hi {
                continue;
            }
            if new_lo > new_hi + BOUND_EPS {
                return Err(Self::infeasible(i, Some(j), format!("empty domain [{new_lo}, {new_hi}]")));
            }
            if new_hi - new_lo <= BOUND_EPS {
                let v = if a > 0.0 { new_lo.min(hi) } else { new_hi.max(lo) };
                let v = if int { v.round() } else { v };
                new_lo = v;
                new_hi = v;
            }
            self.lower[j] = new_lo;
            self.upper[j] = new_hi;
            self.reductions.push(Reduction::BoundTightened { col: j, lower: (lo, new_lo), upper: (hi, new_hi) });
            changed = true;
        }
        Ok(changed)
    }
}

/// Presolves `lp`; integer columns get rounded bounds when `integral` is set.
pub fn presolve(lp: &StandardFormLp, integer: &[bool], integral: bool) -> Result<Presolved, PresolveError> {
    let (m, n) = (lp.num_rows(), lp.num_cols());
    assert_eq!(integer.len(), n);
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    for j in 0..n {
        if integral && integer[j] {
            lower[j] = (lower[j] - BOUND_EPS).ceil();
            upper[j] = (upper[j] + BOUND_EPS).floor();
        }
        if lower[j] > upper[j] + BOUND_EPS {
            return Err(PresolveError::Infeasible { row: None, col: Some(j), detail: "crossed bounds".into() });
        }
    }
    let mut st = State {
        rows: (0..m).map(|i| lp.a.row(i).collect()).collect(),
        rhs: &lp.rhs,
        sense: &lp.sense,
        lower,
        upper,
        integer,
        integral,
        alive: vec![true; m],
        reductions: Vec::new(),
    };
    for _ in 0..MAX_PASSES {
        let mut changed = false;
        for i in 0..m {
            if st.alive[i] {
                changed |= st.visit(i)?;
            }
        }
        if !changed {
            break;
        }
    }

    let State { lower, upper, alive, mut reductions, .. } = st;
    let mut fixed_values = vec![None; n];
    let mut col_map = Vec::new();
    let mut new_col = vec![usize::MAX; n];
    let mut objective_delta = 0.0;
    for j in 0..n {
        if lower[j] == upper[j] {
            fixed_values[j] = Some(lower[j]);
            objective_delta += lp.cost[j] * lower[j];
            reductions.push(Reduction::FixedColumn { col: j, value: lower[j] });
        } else {
            new_col[j] = col_map.len();
            col_map.push(j);
        }
    }
    let row_map: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
    let mut triplets = Vec::new();
    let mut rhs = Vec::with_capacity(row_map.len());
    for (r, &i) in row_map.iter().enumerate() {
        let mut theta = lp.rhs[i];
        for (j, a) in lp.a.row(i) {
            match fixed_values[j] {
                Some(v) => theta -= a * v,
                None => triplets.push((r, new_col[j], a)),
            }
        }
        rhs.push(theta);
    }
    let a = SparseMatrix::from_triplets(row_map.len(), col_map.len(), &triplets)
        .map_err(|e| PresolveError::Lp(LpError::Kernel(e)))?;
    let mut reduced = StandardFormLp::new(
        a,
        rhs,
        col_map.iter().map(|&j| lp.cost[j]).collect(),
        col_map.iter().map(|&j| lower[j]).collect(),
        col_map.iter().map(|&j| upper[j]).collect(),
        row_map.iter().map(|&i| lp.sense[i]).collect(),
    )?;
    reduced.obj_offset = lp.obj_offset + objective_delta;
    Ok(Presolved {
        integer: col_map.iter().map(|&j| integer[j]).collect(),
        lp: reduced,
        log: ReductionLog {
            reductions,
            objective_delta,
            original_cols: n,
            original_rows: m,
            col_map,
            row_map,
            fixed_values,
        },
    })
}

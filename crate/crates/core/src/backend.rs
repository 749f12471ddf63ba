//! LP solver selection for the fixing loop and branch-and-bound.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::hprlp::{self, SolveStatus, SolverConfig, WarmStart};
use crate::lp::StandardFormLp;
use crate::simplex::{solve_simplex, SimplexStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpSolverKind {
    Hpr,
    SimplexOracle,
}

impl FromStr for LpSolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hpr" => Ok(Self::Hpr),
            "simplex-oracle" => Ok(Self::SimplexOracle),
            other => Err(format!("unknown LP solver '{other}' (expected hpr or simplex-oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpOutcome {
    Optimal,
    /// Stopped early; the point is the best iterate found.
    Approximate,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub outcome: LpOutcome,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub seconds: f64,
}

impl LpResult {
    pub fn usable(&self) -> bool {
        matches!(self.outcome, LpOutcome::Optimal | LpOutcome::Approximate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpBackend {
    pub kind: LpSolverKind,
    pub hpr: SolverConfig,
    pub simplex_max_iter: usize,
}

impl LpBackend {
    pub fn hpr(config: SolverConfig) -> Self {
        Self { kind: LpSolverKind::Hpr, hpr: config, simplex_max_iter: 1_000_000 }
    }

    pub fn simplex() -> Self {
        Self { kind: LpSolverKind::SimplexOracle, hpr: SolverConfig::default(), simplex_max_iter: 1_000_000 }
    }

    pub fn with_tolerance(&self, tol: f64) -> Self {
        let mut b = self.clone();
        b.hpr.tolerance = tol;
        b
    }

    pub fn solve(&self, lp: &StandardFormLp, warm: Option<&WarmStart>) -> LpResult {
        let start = Instant::now();
        if lp.num_cols() == 0 {
            let feasible = lp.rhs.iter().zip(&lp.sense).all(|(r, s)| match s {
                crate::lp::RowSense::Ge => *r <= 1e-9,
                crate::lp::RowSense::Eq => r.abs() <= 1e-9,
            });
            return LpResult {
                outcome: if feasible { LpOutcome::Optimal } else { LpOutcome::Infeasible },
                x: Vec::new(),
                y: vec![0.0; lp.num_rows()],
                objective: lp.obj_offset,
                iterations: 0,
                seconds: 0.0,
            };
        }
        match self.kind {
            LpSolverKind::Hpr => {
                let sol = hprlp::solve(lp, &self.hpr, warm);
                let outcome = match sol.status() {
                    SolveStatus::Optimal => LpOutcome::Optimal,
                    SolveStatus::IterationLimit | SolveStatus::TimeLimit => LpOutcome::Approximate,
                    SolveStatus::NumericalFailure => LpOutcome::Failed,
                };
                LpResult {
                    outcome,
                    objective: sol.objective,
                    iterations: sol.report.iterations,
                    x: sol.x,
                    y: sol.y,
                    seconds: start.elapsed().as_secs_f64(),
                }
            }
            LpSolverKind::SimplexOracle => {
                let sol = solve_simplex(lp, self.simplex_max_iter);
                let outcome = match sol.status {
                    SimplexStatus::Optimal => LpOutcome::Optimal,
                    SimplexStatus::Infeasible => LpOutcome::Infeasible,
                    SimplexStatus::Unbounded | SimplexStatus::IterationLimit => LpOutcome::Failed,
                };
                LpResult {
                    outcome,
                    objective: sol.objective,
                    iterations: sol.iterations,
                    x: sol.x,
                    y: sol.y,
                    seconds: start.elapsed().as_secs_f64(),
                }
            }
        }
    }
}

//! Halpern–Peaceman–Rachford first-order LP solver.

mod iterate;
mod residual;
mod scaling;

use std::io::{self, Write};
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use iterate::{hpr_iterate, HprState, NumericalFailure};
pub use residual::{kkt_residual, lagrangian_bound, KktResidual};
pub use scaling::{ScalingPipeline, WorkingLp};

use crate::kernel::{norm2, power_method};
use crate::lp::StandardFormLp;
use crate::scalar::{Precision, Scalar};

const SIGMA_MIN: f64 = 1e-6;
const SIGMA_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative KKT tolerance on residuals and gap.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub precision: Precision,
    /// Initial σ; derived from the data when `None`.
    pub sigma0: Option<f64>,
    /// Restart when the residual falls below this fraction of the epoch start.
    pub restart_decay: f64,
    /// Restart after this many iterations without improvement.
    pub stagnation: usize,
    /// Exponent applied to the σ correction at restarts.
    pub sigma_damping: f64,
    #[serde(skip)]
    pub scaling: ScalingPipeline,
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub seed: u64,
    /// Minimum spacing, in iterations, of original-space termination checks.
    pub check_interval: usize,
    pub record_trajectory: bool,
    /// Re-solve in FP64 after a numerical failure in FP32.
    pub fp64_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iter: 200_000,
            time_limit: None,
            precision: Precision::Fp64,
            sigma0: None,
            restart_decay: 0.2,
            stagnation: 500,
            sigma_damping: 0.5,
            scaling: ScalingPipeline::default(),
            power_tol: 1e-4,
            power_max_iter: 5_000,
            seed: 0,
            check_interval: 20,
            record_trajectory: false,
            fp64_fallback: true,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    fn validate(&self) {
        assert!(self.tolerance > 0.0, "tolerance must be positive");
        assert!(self.restart_decay > 0.0 && self.restart_decay < 1.0, "restart decay must lie in (0, 1)");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    TimeLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartReason {
    Decay,
    Stagnation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub epoch: usize,
    /// Iterations since the epoch began (1 after the first step).
    pub epoch_iteration: usize,
    /// Working-space ‖ℛ‖ at the bar iterate.
    pub residual: f64,
    pub rel_primal: f64,
    pub rel_complementarity: f64,
    pub rel_dual: f64,
    pub rel_gap: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartEvent {
    pub iteration: usize,
    /// Index of the epoch that starts here.
    pub epoch: usize,
    pub reason: RestartReason,
    /// Working-space relative residual at the new anchor.
    pub residual: f64,
    pub sigma_before: f64,
    pub sigma_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub epochs: usize,
    pub seconds: f64,
    pub precision: Precision,
    pub fp64_fallback: bool,
    pub lambda: f64,
    pub sigma: f64,
    /// Residual of the returned point in the original space.
    pub residual: KktResidual,
    pub trajectory: Vec<TrajectoryPoint>,
    pub restarts: Vec<RestartEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub report: SolveReport,
}

impl LpSolution {
    pub fn status(&self) -> SolveStatus {
        self.report.status
    }
}

/// Starting point in the original space; missing duals start at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
}

/// Solves `lp` and returns the best bar iterate found.
pub fn solve(lp: &StandardFormLp, config: &SolverConfig, warm: Option<&WarmStart>) -> LpSolution {
    config.validate();
    let start = Instant::now();
    let deadline = config.time_limit.map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let mut sol = match config.precision {
        Precision::Fp64 => run::<f64>(lp, config, warm, deadline),
        Precision::Fp32 => run::<f32>(lp, config, warm, deadline),
    };
    if config.precision == Precision::Fp32
        && sol.report.status == SolveStatus::NumericalFailure
        && config.fp64_fallback
    {
        warn!("fp32 solve failed numerically, retrying in fp64");
        let done = sol.report.iterations;
        let mut cfg = config.clone();
        cfg.max_iter = cfg.max_iter.saturating_sub(done).max(1);
        sol = run::<f64>(lp, &cfg, warm, deadline);
        sol.report.iterations += done;
        sol.report.fp64_fallback = true;
    }
    sol.report.seconds = start.elapsed().as_secs_f64();
    sol
}

fn run<T: Scalar>(
    lp: &StandardFormLp,
    config: &SolverConfig,
    warm: Option<&WarmStart>,
    deadline: Option<Instant>,
) -> LpSolution {
    let work = WorkingLp::<T>::new(lp, config.scaling);
    let (m, n) = (work.num_rows(), work.num_cols());

    let lambda = if m == 0 || work.a.nnz() == 0 {
        1.0
    } else {
        match power_method(&work.a, config.power_tol, config.power_max_iter, config.seed) {
            Ok(p) if p.bound > 0.0 && p.bound.is_finite() => p.bound,
            _ => 1.0,
        }
    };
    let sigma = config
        .sigma0
        .unwrap_or_else(|| {
            let (r, c) = (work.rhs_norm, work.cost_norm);
            if r > 0.0 && c > 0.0 {
                r / c
            } else {
                1.0
            }
        })
        .clamp(SIGMA_MIN, SIGMA_MAX);

    let (x0, y0) = match warm {
        Some(w) if w.x.len() == n => {
            let x = work.scale_x(&w.x);
            let y = match &w.y {
                Some(y) if y.len() == m => work.scale_y(y),
                _ => vec![T::zero(); m],
            };
            (x, y)
        }
        Some(_) => {
            warn!("warm start ignored: dimension mismatch");
            (vec![T::zero(); n], vec![T::zero(); m])
        }
        None => (vec![T::zero(); n], vec![T::zero(); m]),
    };
    let mut st = HprState::new(&work, x0, y0, vec![T::zero(); n], sigma, lambda);

    let mut trajectory = Vec::new();
    let mut restarts = Vec::new();
    let mut epoch_start = st.current_residual(&work).relative;
    let mut epoch_best = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut best: Option<(f64, Vec<T>, Vec<T>, Vec<T>)> = None;
    let mut last_check: Option<usize> = None;
    let mut status = SolveStatus::IterationLimit;
    let mut verified: Option<(Vec<f64>, Vec<f64>, Vec<f64>, KktResidual)> = None;

    while st.iterations < config.max_iter {
        if let Some(d) = deadline {
            if st.iterations % 16 == 0 && Instant::now() >= d {
                status = SolveStatus::TimeLimit;
                break;
            }
        }
        if hpr_iterate(&mut st, &work).is_err() {
            status = SolveStatus::NumericalFailure;
            break;
        }
        let r = st.bar_residual(&work);
        if !r.is_finite() {
            status = SolveStatus::NumericalFailure;
            break;
        }
        if config.record_trajectory {
            trajectory.push(TrajectoryPoint {
                iteration: st.iterations,
                epoch: st.epoch,
                epoch_iteration: st.k,
                residual: r.combined,
                rel_primal: r.rel_primal,
                rel_complementarity: r.rel_complementarity,
                rel_dual: r.rel_dual,
                rel_gap: r.rel_gap,
                sigma: st.sigma,
            });
        }

        let worst = r.worst();
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, st.bar_x.clone(), st.bar_y.clone(), st.bar_z.clone()));
        }

        if worst <= config.tolerance && last_check.is_none_or(|k| st.iterations >= k + config.check_interval) {
            last_check = Some(st.iterations);
            let (x, y, z) = (work.unscale_x(&st.bar_x), work.unscale_y(&st.bar_y), work.unscale_z(&st.bar_z));
            let orig = kkt_residual(lp, &x, &y, &z);
            if orig.worst() <= config.tolerance {
                verified = Some((x, y, z, orig));
                status = SolveStatus::Optimal;
                break;
            }
            debug!("scaled residual {worst:.3e} but original {:.3e} at k={}", orig.worst(), st.iterations);
        }

        if r.relative < epoch_best {
            epoch_best = r.relative;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        let reason = if r.relative <= config.restart_decay * epoch_start {
            Some(RestartReason::Decay)
        } else if since_improvement >= config.stagnation {
            Some(RestartReason::Stagnation)
        } else {
            None
        };
        if let Some(reason) = reason {
            let before = st.sigma;
            st.sigma = updated_sigma(&st, config.sigma_damping);
            st.restart_at_bar(&work);
            epoch_start = r.relative;
            epoch_best = r.relative;
            since_improvement = 0;
            restarts.push(RestartEvent {
                iteration: st.iterations,
                epoch: st.epoch,
                reason,
                residual: r.relative,
                sigma_before: before,
                sigma_after: st.sigma,
            });
        }
    }

    let (x, y, z, residual) = match verified {
        Some(v) => v,
        None => {
            let (bx, by, bz) = match best {
                Some((_, x, y, z)) => (x, y, z),
                None => (st.bar_x.clone(), st.bar_y.clone(), st.bar_z.clone()),
            };
            let (x, y, z) = (work.unscale_x(&bx), work.unscale_y(&by), work.unscale_z(&bz));
            let res = kkt_residual(lp, &x, &y, &z);
            (x, y, z, res)
        }
    };
    LpSolution {
        objective: lp.objective(&x),
        x,
        y,
        z,
        report: SolveReport {
            status,
            iterations: st.iterations,
            epochs: st.epoch + 1,
            seconds: 0.0,
            precision: if T::LABEL == "fp32" { Precision::Fp32 } else { Precision::Fp64 },
            fp64_fallback: false,
            lambda,
            sigma: st.sigma,
            residual,
            trajectory,
            restarts,
        },
    }
}

/// Primal-dual balancing over the ending epoch.
fn updated_sigma<T: Scalar>(st: &HprState<T>, damping: f64) -> f64 {
    let dx = diff_norm(&st.bar_x, &st.anchor_x);
    let dy = diff_norm(&st.bar_y, &st.anchor_y);
    if !(dx > 0.0 && dy > 0.0) || !dx.is_finite() || !dy.is_finite() {
        return st.sigma;
    }
    let target = dx / (st.lambda.sqrt() * dy);
    let factor = (target / st.sigma).powf(damping).clamp(0.25, 4.0);
    (st.sigma * factor).clamp(SIGMA_MIN, SIGMA_MAX)
}

fn diff_norm<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p.wide() - q.wide()).collect();
    norm2(&d)
}

/// Writes the trajectory as CSV.
pub fn write_iteration_log<W: Write>(report: &SolveReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "k,epoch,epoch_k,residual,rel_primal,rel_complementarity,rel_dual,rel_gap,sigma")?;
    for p in &report.trajectory {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            p.iteration,
            p.epoch,
            p.epoch_iteration,
            p.residual,
            p.rel_primal,
            p.rel_complementarity,
            p.rel_dual,
            p.rel_gap,
            p.sigma
        )?;
    }
    Ok(())
}

//! Transmission filtering, the two-stage gap schedule, and run reports.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{LpBackend, LpSolverKind};
use crate::bb::{relative_gap, solve_milp, BbConfig, BbResult, BbStatus, Incumbent};
use crate::fixing::{successive_fixing, FixingConfig, FixingError, RoundReport};
use crate::formulation::{
    apply_instance_scaling, build_model, line_flows, unscale_solution, FormulationError, MonitoredFlow, ScalingInfo,
    VariableMap,
};
use crate::hprlp::{self, SolveReport, SolverConfig};
use crate::instance::{PtdfError, PtdfTable, ScucInstance};
use crate::presolve::{lp_presolve, milp_presolve};
use crate::scalar::Precision;

/// Relative flow excess, as a fraction of the limit, that counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Ptdf(#[from] PtdfError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Fixing(#[from] FixingError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no times given")]
    Empty,
    #[error("negative time {0}")]
    Negative(String),
    #[error("reference value is zero")]
    ZeroReference,
}

/// Shifted geometric mean `exp(mean(ln(t + 10))) − 10`.
pub fn sgm10(times: &[f64]) -> Result<f64, MetricsError> {
    if times.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(t) = times.iter().find(|t| **t < 0.0 || t.is_nan()) {
        return Err(MetricsError::Negative(t.to_string()));
    }
    let mean = times.iter().map(|t| (t + 10.0).ln()).sum::<f64>() / times.len() as f64;
    Ok(mean.exp() - 10.0)
}

/// `(ν − ν_ref) / ν_ref × 100`.
pub fn rel_gap_percent(value: f64, reference: f64) -> Result<f64, MetricsError> {
    if reference == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    Ok((value - reference) / reference * 100.0)
}

/// `t / t_ref`.
pub fn time_ratio(time: f64, reference: f64) -> Result<f64, MetricsError> {
    if reference == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    Ok(time / reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub line: usize,
    pub period: usize,
    pub case: usize,
    pub flow: f64,
    pub limit: f64,
    /// `|flow| − limit`.
    pub excess: f64,
    /// Already in the monitored set (a numerical-tolerance artefact).
    pub monitored: bool,
}

impl Violation {
    pub fn key(&self) -> MonitoredFlow {
        MonitoredFlow { line: self.line, period: self.period, case: self.case }
    }
}

/// Flow-limit violations at `x` over every line, period and case, largest first.
pub fn screen_violations(
    x: &[f64],
    instance: &ScucInstance,
    ptdf: &PtdfTable,
    map: &VariableMap,
    monitored: &BTreeSet<MonitoredFlow>,
) -> Vec<Violation> {
    let net = &instance.network;
    let jobs: Vec<(usize, usize)> =
        (0..instance.time_periods).flat_map(|t| (0..net.num_cases()).map(move |c| (t, c))).collect();
    let mut out: Vec<Violation> = jobs
        .par_iter()
        .flat_map_iter(|&(t, c)| {
            let flows = line_flows(instance, ptdf, map, x, t, c);
            let outaged = net.outaged_line(c);
            flows
                .into_iter()
                .enumerate()
                .filter(move |(l, _)| outaged != Some(*l))
                .filter_map(move |(l, f)| {
                    let limit = net.limit(l, c);
                    let excess = f.abs() - limit;
                    let tol = (VIOLATION_TOL * limit).max(1e-9);
                    (excess > tol).then(|| {
                        let key = MonitoredFlow { line: l, period: t, case: c };
                        Violation { line: l, period: t, case: c, flow: f, limit, excess, monitored: monitored.contains(&key) }
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(|a, b| b.excess.total_cmp(&a.excess).then((a.line, a.period, a.case).cmp(&(b.line, b.period, b.case))));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverConfig {
    pub tau: f64,
    /// Threshold for stage 2; defaults to `tau`.
    pub tau2: Option<f64>,
    pub rounds1: usize,
    pub rounds2: usize,
    pub gap1: f64,
    pub gap2: f64,
    pub precision: Precision,
    pub instance_scaling: bool,
    pub fixing: bool,
    pub lp_solver: LpSolverKind,
    pub time_limit: Option<f64>,
    pub seed: u64,
    /// LP tolerance inside the fixing loop.
    pub fixing_tolerance: f64,
    /// LP tolerance at branch-and-bound nodes.
    pub node_tolerance: f64,
    pub node_limit: usize,
    pub max_passes: usize,
    /// Record the root relaxation's iteration trajectory.
    pub iteration_log: bool,
    pub reference_objective: Option<f64>,
    pub reference_time: Option<f64>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            tau2: None,
            rounds1: 2,
            rounds2: 4,
            gap1: 0.01,
            gap2: 0.001,
            precision: Precision::Fp64,
            instance_scaling: true,
            fixing: true,
            lp_solver: LpSolverKind::Hpr,
            time_limit: None,
            seed: 0,
            fixing_tolerance: 1e-4,
            node_tolerance: 1e-6,
            node_limit: 100_000,
            max_passes: 50,
            iteration_log: false,
            reference_objective: None,
            reference_time: None,
        }
    }
}

impl DriverConfig {
    fn validate(&self) -> Result<(), DriverError> {
        for (name, tau) in [("tau", self.tau), ("tau2", self.tau2.unwrap_or(self.tau))] {
            if !(0.0..0.5).contains(&tau) {
                return Err(DriverError::Config(format!("{name} = {tau} outside [0, 0.5)")));
            }
        }
        if self.rounds1 == 0 || self.rounds2 == 0 {
            return Err(DriverError::Config("fixing rounds must be at least 1".into()));
        }
        if !(self.gap1 >= 0.0 && self.gap2 >= 0.0) {
            return Err(DriverError::Config("gaps must be non-negative".into()));
        }
        Ok(())
    }

    fn solver_config(&self, tolerance: f64) -> SolverConfig {
        let mut c = SolverConfig::default().with_tolerance(tolerance).with_precision(self.precision);
        c.seed = self.seed;
        // Ruiz equilibration is reserved for unscaled instances.
        c.scaling.ruiz = !self.instance_scaling;
        c
    }

    fn backend(&self, tolerance: f64) -> LpBackend {
        match self.lp_solver {
            LpSolverKind::Hpr => LpBackend::hpr(self.solver_config(tolerance)),
            LpSolverKind::SimplexOracle => LpBackend::simplex(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Solved,
    TimeLimit,
    NodeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassReport {
    pub stage: u8,
    pub pass: usize,
    pub monitored: usize,
    pub fixing_rounds: Vec<RoundReport>,
    pub fixed_binaries: usize,
    pub free_binaries: usize,
    pub bb_status: BbStatus,
    pub bb_nodes: usize,
    pub bb_gap: f64,
    /// Objective and bound in original units.
    pub objective: Option<f64>,
    pub bound: f64,
    pub violations: Vec<Violation>,
    pub lp_seconds: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total: f64,
    /// Time inside LP solves (fixing rounds and branch-and-bound).
    pub lp: f64,
    /// Everything else.
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Against `reference_objective`, in percent.
    pub rel_gap_percent: Option<f64>,
    pub time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub status: RunStatus,
    pub stage: u8,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub scaling: ScalingInfo,
    pub timings: Timings,
    pub passes: Vec<PassReport>,
    pub monitored: Vec<MonitoredFlow>,
    pub total_nodes: usize,
    pub total_fixed: usize,
    /// `commitment[g][t]` of the returned schedule.
    pub commitment: Vec<Vec<u8>>,
    pub metrics: Metrics,
    pub config: DriverConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Model point in original units, if a schedule was found.
    pub x: Option<Vec<f64>>,
    pub map: VariableMap,
    /// Root relaxation trajectory, when requested.
    pub root_lp: Option<SolveReport>,
    /// Node log of the final branch-and-bound.
    pub last_bb: Option<BbResult>,
}

/// Solves `instance` end to end.
pub fn run(instance: &ScucInstance, name: &str, config: &DriverConfig) -> Result<RunOutcome, DriverError> {
    config.validate()?;
    let start = Instant::now();
    let deadline = config.time_limit.map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let remaining = || deadline.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64());

    let (work, scaling) = if config.instance_scaling {
        apply_instance_scaling(instance)
    } else {
        (instance.clone(), ScalingInfo::identity())
    };
    let ptdf = work.ptdf()?;
    let fix_backend = config.backend(config.fixing_tolerance);

    let mut monitored = BTreeSet::new();
    let mut passes = Vec::new();
    let mut lp_seconds = 0.0;
    let mut incumbent: Option<Incumbent> = None;
    let mut last_bb: Option<BbResult> = None;
    let mut last_map = None;
    let mut status = RunStatus::Solved;
    let mut stage_reached = 1u8;
    let mut root_lp = None;

    'stages: for stage in [1u8, 2] {
        stage_reached = stage;
        let (rounds, gap, tau) = if stage == 1 {
            (config.rounds1, config.gap1, config.tau)
        } else {
            (config.rounds2, config.gap2, config.tau2.unwrap_or(config.tau))
        };
        for pass in 1..=config.max_passes {
            let pass_start = Instant::now();
            let mut model = build_model(&work, &ptdf, &monitored)?;
            if config.iteration_log && root_lp.is_none() {
                root_lp = Some(root_trajectory(&model, config));
            }
            let mut fixing_rounds = Vec::new();
            let mut pass_lp = 0.0;
            if config.fixing {
                let fcfg = FixingConfig { tau, rounds };
                match successive_fixing(&mut model, &work, &fcfg, &fix_backend) {
                    Ok(r) => fixing_rounds = r,
                    Err(FixingError::InfeasibleAfterFixing { round, source }) => {
                        warn!("stage {stage} pass {pass}: infeasible after fixing round {round}: {source}");
                        status = RunStatus::Infeasible;
                        break 'stages;
                    }
                    Err(e) => return Err(e.into()),
                }
                pass_lp += fixing_rounds.iter().map(|r| r.lp_seconds).sum::<f64>();
            }
            let fixed_binaries = model.fixings().len();
            let free_binaries = model.num_free_binaries();

            let bb_cfg = BbConfig {
                gap,
                time_limit: remaining(),
                node_limit: config.node_limit,
                backend: config.backend(config.node_tolerance),
                node_tolerance: config.node_tolerance,
                ..BbConfig::default()
            };
            let bb = solve_milp(&model, &bb_cfg, incumbent.clone());
            pass_lp += bb.lp_seconds;
            lp_seconds += pass_lp;

            let violations = match &bb.incumbent {
                Some(inc) => screen_violations(&inc.x, &work, &ptdf, &model.map, &monitored),
                None => Vec::new(),
            };
            let objective = bb.incumbent.as_ref().map(|i| scaling.unscale_objective(i.objective));
            info!(
                "stage {stage} pass {pass}: objective {objective:?}, {} nodes, {} violations",
                bb.nodes,
                violations.len()
            );
            passes.push(PassReport {
                stage,
                pass,
                monitored: monitored.len(),
                fixing_rounds,
                fixed_binaries,
                free_binaries,
                bb_status: bb.status,
                bb_nodes: bb.nodes,
                bb_gap: bb.gap,
                objective,
                bound: scaling.unscale_objective(bb.bound),
                violations: violations
                    .iter()
                    .map(|v| Violation {
                        flow: v.flow * scaling.production,
                        limit: v.limit * scaling.production,
                        excess: v.excess * scaling.production,
                        ..*v
                    })
                    .collect(),
                lp_seconds: pass_lp,
                seconds: pass_start.elapsed().as_secs_f64(),
            });
            let bb_status = bb.status;
            if bb.incumbent.is_some() {
                incumbent = bb.incumbent.clone();
            }
            last_bb = Some(bb);
            last_map = Some(model.map.clone());

            match bb_status {
                BbStatus::Infeasible => {
                    status = RunStatus::Infeasible;
                    break 'stages;
                }
                BbStatus::TimeLimit => {
                    status = RunStatus::TimeLimit;
                    break 'stages;
                }
                BbStatus::NodeLimit => {
                    status = RunStatus::NodeLimit;
                    break 'stages;
                }
                BbStatus::Solved => {}
            }
            if violations.is_empty() {
                continue 'stages;
            }
            let before = monitored.len();
            monitored.extend(violations.iter().map(Violation::key));
            if monitored.len() == before {
                warn!("violated flows are already monitored; stopping filtering");
                continue 'stages;
            }
            // The incumbent violates the new rows; let the next pass find its own.
            incumbent = None;
            if pass == config.max_passes {
                warn!("filtering pass limit reached with violations left");
            }
        }
    }

    let map = last_map.unwrap_or_else(|| build_model(&work, &ptdf, &monitored).map(|m| m.map).expect("model builds"));
    let x = incumbent.as_ref().map(|inc| unscale_solution(&inc.x, &scaling, &map)).transpose()?;
    let commitment = match &x {
        Some(x) => (0..map.num_gens())
            .map(|g| (0..map.num_periods()).map(|t| u8::from(x[map.u(g, t)] > 0.5)).collect())
            .collect(),
        None => Vec::new(),
    };
    let objective = incumbent.as_ref().map(|i| scaling.unscale_objective(i.objective));
    let bound = last_bb.as_ref().map_or(f64::NEG_INFINITY, |b| scaling.unscale_objective(b.bound));
    let total = start.elapsed().as_secs_f64();
    let lp = lp_seconds.min(total);
    let metrics = Metrics {
        rel_gap_percent: match (objective, config.reference_objective) {
            (Some(v), Some(r)) => rel_gap_percent(v, r).ok(),
            _ => None,
        },
        time_ratio: config.reference_time.and_then(|r| time_ratio(total, r).ok()),
    };
    let report = RunReport {
        instance: name.to_string(),
        status,
        stage: stage_reached,
        objective,
        bound,
        gap: relative_gap(objective, bound),
        scaling,
        timings: Timings { total, lp, other: total - lp },
        total_nodes: passes.iter().map(|p| p.bb_nodes).sum(),
        total_fixed: passes.last().map_or(0, |p| p.fixed_binaries),
        passes,
        monitored: monitored.into_iter().collect(),
        commitment,
        metrics,
        config: config.clone(),
    };
    Ok(RunOutcome { report, x, map, root_lp, last_bb })
}

/// LP relaxation of the initial model with its iteration trajectory.
fn root_trajectory(model: &crate::formulation::MilpModel, config: &DriverConfig) -> SolveReport {
    let mut cfg = config.solver_config(config.node_tolerance);
    cfg.record_trajectory = true;
    match milp_presolve(model).and_then(|p| lp_presolve(&p.lp)) {
        Ok(q) => hprlp::solve(&q.lp, &cfg, None).report,
        Err(_) => hprlp::solve(&model.lp, &cfg, None).report,
    }
}

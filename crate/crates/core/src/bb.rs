//! Best-first branch-and-bound over the free binaries of a [`MilpModel`].
//!
//! Node lower bounds are Lagrangian bounds `θᵀy⁺ + Σ_j min_{x_j∈[l_j,u_j]} (μ − Aᵀy)_j x_j`
//! evaluated at the node LP's dual iterate, so they stay valid however loosely
//! that LP was solved.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::backend::{LpBackend, LpOutcome};
use crate::formulation::{MilpModel, RowFamily, VarKind};
use crate::hprlp::{lagrangian_bound, WarmStart};
use crate::lp::StandardFormLp;
use crate::presolve::{crush, crush_rows, presolve, uncrush, Presolved};
use crate::simplex::{solve_simplex, SimplexStatus};

/// Integrality tolerance for LP values of binaries.
pub const INT_TOL: f64 = 1e-6;
/// Largest row or bound violation accepted for an incumbent.
pub const FEAS_TOL: f64 = 1e-6;
/// Incumbent LPs above this many columns are not polished by simplex.
const POLISH_MAX_COLS: usize = 2_500;

#[derive(Debug, Clone, PartialEq)]
pub struct BbConfig {
    /// Relative gap `(incumbent − bound) / |incumbent|` at which to stop.
    pub gap: f64,
    pub time_limit: Option<f64>,
    pub node_limit: usize,
    /// LP solver for node relaxations.
    pub backend: LpBackend,
    /// Tolerance for node LPs.
    pub node_tolerance: f64,
    /// Tolerance for the continuous LP behind an incumbent.
    pub incumbent_tolerance: f64,
}

impl Default for BbConfig {
    fn default() -> Self {
        Self {
            gap: 1e-3,
            time_limit: None,
            node_limit: 100_000,
            backend: LpBackend::hpr(Default::default()),
            node_tolerance: 1e-6,
            incumbent_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncumbentSource {
    RoundingRepair,
    Leaf,
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    /// Full-space point of the model.
    pub x: Vec<f64>,
    pub objective: f64,
    pub source: IncumbentSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BbStatus {
    /// Gap target reached or tree exhausted.
    Solved,
    NodeLimit,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeAction {
    Branched,
    PrunedByBound,
    Infeasible,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeLogEntry {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub bound: f64,
    pub incumbent: Option<f64>,
    pub action: NodeAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbResult {
    pub status: BbStatus,
    pub incumbent: Option<Incumbent>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_solves: usize,
    pub lp_seconds: f64,
    pub lp_iterations: usize,
    pub node_log: Vec<NodeLogEntry>,
}

/// Relative gap; `0` when the bound meets the incumbent, `∞` without one.
pub fn relative_gap(incumbent: Option<f64>, bound: f64) -> f64 {
    match incumbent {
        None => f64::INFINITY,
        Some(z) => {
            let diff = (z - bound).max(0.0);
            if diff == 0.0 {
                0.0
            } else {
                diff / z.abs().max(1e-10)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    fixings: Vec<(usize, f64)>,
    bound: f64,
    warm_x: Option<Vec<f64>>,
    warm_y: Option<Vec<f64>>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap: smallest bound, then smallest id, first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then(other.0.id.cmp(&self.0.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    config: &'a BbConfig,
    initial_u: Vec<f64>,
    deadline: Option<Instant>,
    incumbent: Option<Incumbent>,
    lp_solves: usize,
    lp_seconds: f64,
    lp_iterations: usize,
}

impl Search<'_> {
    fn remaining(&self) -> Option<f64> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64())
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn backend(&self, tol: f64) -> LpBackend {
        let mut b = self.config.backend.with_tolerance(tol);
        b.hpr.time_limit = match (b.hpr.time_limit, self.remaining()) {
            (Some(a), Some(r)) => Some(a.min(r)),
            (a, r) => a.or(r),
        };
        b
    }

    fn offer(&mut self, cand: Incumbent) -> bool {
        if self.incumbent.as_ref().is_none_or(|inc| cand.objective < inc.objective - 1e-12 * (1.0 + inc.objective.abs())) {
            info!("new incumbent {:.8e} ({:?})", cand.objective, cand.source);
            self.incumbent = Some(cand);
            true
        } else {
            false
        }
    }

    fn incumbent_value(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }

    /// Completes a 0/1 assignment of the binaries with an LP over the continuous columns.
    fn evaluate_binaries(&mut self, binaries: &[(usize, f64)], source: IncumbentSource) -> Option<Incumbent> {
        let mut lp = self.model.lp.clone();
        for &(j, v) in binaries {
            if v < lp.lower[j] - INT_TOL || v > lp.upper[j] + INT_TOL {
                return None;
            }
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let reduced = presolve(&lp, &self.model.integer, true).ok()?;
        let res = self.backend(self.config.incumbent_tolerance).solve(&reduced.lp, None);
        self.account(&res);
        let mut x = if res.usable() { Some(self.complete(&reduced, &res.x)) } else { None };
        let violation = |x: &Vec<f64>| self.model.lp.max_violation(x);
        if x.as_ref().is_none_or(|x| violation(x) > FEAS_TOL) && reduced.lp.num_cols() <= POLISH_MAX_COLS {
            let s = solve_simplex(&reduced.lp, 1_000_000);
            if s.status == SimplexStatus::Optimal {
                x = Some(self.complete(&reduced, &s.x));
            } else if s.status == SimplexStatus::Infeasible {
                return None;
            }
        }
        let x = x?;
        let viol = violation(&x);
        if viol > FEAS_TOL {
            debug!("candidate rejected: violation {viol:.3e}");
            return None;
        }
        Some(Incumbent { objective: self.model.lp.objective(&x), x, source })
    }

    fn complete(&self, reduced: &Presolved, x: &[f64]) -> Vec<f64> {
        let mut full = uncrush(x, &reduced.log).expect("presolve log matches");
        for (j, v) in full.iter_mut().enumerate() {
            *v = v.clamp(self.model.lp.lower[j], self.model.lp.upper[j]);
            if self.model.integer[j] {
                *v = v.round();
            }
        }
        full
    }

    fn account(&mut self, res: &crate::backend::LpResult) {
        self.lp_solves += 1;
        self.lp_seconds += res.seconds;
        self.lp_iterations += res.iterations;
    }

    /// Rounds `u` at 0.5 (ties to 0) and derives `v`, `w` from it.
    fn rounding_repair(&mut self, x: &[f64]) -> Option<Incumbent> {
        let map = &self.model.map;
        let lp = &self.model.lp;
        let mut assignment = Vec::new();
        for g in 0..map.num_gens() {
            let mut prev = self.initial_u[g];
            for t in 0..map.num_periods() {
                let j = map.u(g, t);
                let u = if lp.lower[j] == lp.upper[j] { lp.lower[j] } else if x[j] > 0.5 { 1.0 } else { 0.0 };
                assignment.push((j, u));
                assignment.push((map.v(g, t), (u - prev).max(0.0)));
                assignment.push((map.w(g, t), (prev - u).max(0.0)));
                prev = u;
            }
        }
        self.evaluate_binaries(&assignment, IncumbentSource::RoundingRepair)
    }

    /// Schedules that keep every unit in its initial state, or switch it off
    /// as soon as the carried minimum up time allows.
    fn fallback_schedules(&mut self) -> Option<Incumbent> {
        let map = &self.model.map;
        let (ng, nt) = (map.num_gens(), map.num_periods());
        let forced: Vec<usize> = (0..ng)
            .map(|g| {
                (0..nt)
                    .filter(|&t| {
                        let row = self.row_index(RowFamily::MinUp, g, t);
                        row.is_some_and(|i| self.model.lp.rhs[i] > 0.5)
                    })
                    .count()
            })
            .collect();
        for hold in [true, false] {
            let x: Vec<f64> = (0..self.model.num_cols())
                .map(|j| match self.model.map.kind(j) {
                    VarKind::Commit { g, t }
                        if self.initial_u[g] > 0.5 && (hold || t < forced[g]) => {
                            1.0
                        }
                    _ => 0.0,
                })
                .collect();
            if let Some(inc) = self.rounding_repair(&x) {
                return Some(inc);
            }
        }
        None
    }

    fn row_index(&self, family: RowFamily, g: usize, t: usize) -> Option<usize> {
        self.model.row_tags.iter().position(|r| r.family == family && r.gen == Some(g) && r.period == t)
    }
}

/// Binary with the largest fractionality, preferring `u`, then `v`, then `w`.
fn branching_column(model: &MilpModel, x: &[f64]) -> Option<usize> {
    let mut best: [Option<(usize, f64)>; 3] = [None; 3];
    for (j, kind) in model.map.kinds().iter().enumerate() {
        let class = match kind {
            VarKind::Commit { .. } => 0,
            VarKind::Startup { .. } => 1,
            VarKind::Shutdown { .. } => 2,
            _ => continue,
        };
        if model.lp.lower[j] == model.lp.upper[j] {
            continue;
        }
        let frac = (x[j] - x[j].round()).abs();
        if frac <= INT_TOL {
            continue;
        }
        // columns of one class are laid out in (g, t) order, so the first wins ties
        match best[class] {
            Some((_, f)) if f >= frac => {}
            _ => best[class] = Some((j, frac)),
        }
    }
    best.iter().flatten().next().map(|(j, _)| *j)
}

/// Branch-and-bound on `model`, optionally seeded with a known incumbent.
pub fn solve_milp(model: &MilpModel, config: &BbConfig, start: Option<Incumbent>) -> BbResult {
    let begin = Instant::now();
    let deadline = config.time_limit.map(|s| begin + Duration::from_secs_f64(s.max(0.0)));
    let initial_u: Vec<f64> = (0..model.map.num_gens())
        .map(|g| {
            model
                .row_tags
                .iter()
                .position(|r| r.family == RowFamily::Logic && r.gen == Some(g) && r.period == 0)
                .map_or(0.0, |i| model.lp.rhs[i])
        })
        .collect();
    let mut search = Search {
        model,
        config,
        initial_u,
        deadline,
        incumbent: None,
        lp_solves: 0,
        lp_seconds: 0.0,
        lp_iterations: 0,
    };
    if let Some(mut s) = start {
        if s.x.len() == model.num_cols() && model.lp.max_violation(&s.x) <= FEAS_TOL {
            s.objective = model.lp.objective(&s.x);
            s.source = IncumbentSource::Provided;
            search.offer(s);
        } else {
            warn!("provided incumbent is infeasible for this model and was dropped");
        }
    }

    let mut log = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut stack: Vec<Node> = Vec::new();
    let mut next_id = 1;
    stack.push(Node { id: 0, parent: None, depth: 0, fixings: Vec::new(), bound: f64::NEG_INFINITY, warm_x: None, warm_y: None });
    // Smallest bound among nodes closed because of the incumbent.
    let mut closed_bound = f64::INFINITY;
    let mut status = BbStatus::Solved;
    let mut nodes = 0usize;
    let mut root_done = false;

    loop {
        let node = if search.incumbent.is_none() {
            stack.pop().or_else(|| heap.pop().map(|q: Queued| q.0))
        } else {
            heap.extend(stack.drain(..).map(Queued));
            heap.pop().map(|q| q.0)
        };
        let Some(node) = node else { break };
        let open_bound = heap.peek().map_or(f64::INFINITY, |q: &Queued| q.0.bound).min(node.bound);
        let global = open_bound.min(closed_bound);
        if relative_gap(search.incumbent_value(), global) <= config.gap {
            closed_bound = closed_bound.min(node.bound);
            heap.extend(stack.drain(..).map(Queued));
            while let Some(q) = heap.pop() {
                closed_bound = closed_bound.min(q.0.bound);
            }
            break;
        }
        if search.timed_out() {
            status = BbStatus::TimeLimit;
            stack.push(node);
            break;
        }
        if nodes >= config.node_limit {
            status = BbStatus::NodeLimit;
            stack.push(node);
            break;
        }
        nodes += 1;

        let entry = |action, bound, inc: Option<f64>| NodeLogEntry {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            bound,
            incumbent: inc,
            action,
        };
        if search.incumbent_value().is_some_and(|z| relative_gap(Some(z), node.bound) <= config.gap) {
            closed_bound = closed_bound.min(node.bound);
            log.push(entry(NodeAction::PrunedByBound, node.bound, search.incumbent_value()));
            continue;
        }

        let mut lp: StandardFormLp = model.lp.clone();
        for &(j, v) in &node.fixings {
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let reduced = match presolve(&lp, &model.integer, true) {
            Ok(r) => r,
            Err(e) => {
                debug!("node {} infeasible in presolve: {e}", node.id);
                log.push(entry(NodeAction::Infeasible, node.bound, search.incumbent_value()));
                continue;
            }
        };
        let warm = node.warm_x.as_ref().map(|x| WarmStart {
            x: crush(x, &reduced.log).expect("full-space warm start"),
            y: node.warm_y.as_ref().map(|y| crush_rows(y, &reduced.log).expect("full-space duals")),
        });
        let res = search.backend(config.node_tolerance).solve(&reduced.lp, warm.as_ref());
        search.account(&res);
        if res.outcome == LpOutcome::Infeasible {
            log.push(entry(NodeAction::Infeasible, node.bound, search.incumbent_value()));
            continue;
        }
        let (bound, x_full, y_full) = if res.usable() {
            let lb = match res.outcome {
                LpOutcome::Optimal if config.backend.kind == crate::backend::LpSolverKind::SimplexOracle => res.objective,
                _ => lagrangian_bound(&reduced.lp, &res.y),
            };
            let x_full = uncrush(&res.x, &reduced.log).expect("presolve log matches");
            let mut y_full = vec![0.0; model.num_rows()];
            for (k, &i) in reduced.log.row_map.iter().enumerate() {
                y_full[i] = res.y[k];
            }
            (node.bound.max(lb), Some(x_full), Some(y_full))
        } else {
            warn!("node {} LP {:?}; branching without a relaxation", node.id, res.outcome);
            (node.bound, None, None)
        };

        if !root_done {
            root_done = true;
            if let Some(x) = &x_full {
                if let Some(inc) = search.rounding_repair(x) {
                    search.offer(inc);
                }
            }
            if search.incumbent.is_none() {
                if let Some(inc) = search.fallback_schedules() {
                    search.offer(inc);
                }
            }
        }

        if search.incumbent_value().is_some_and(|z| relative_gap(Some(z), bound) <= config.gap) {
            closed_bound = closed_bound.min(bound);
            log.push(entry(NodeAction::PrunedByBound, bound, search.incumbent_value()));
            continue;
        }

        let node_view = {
            let mut m = model.clone();
            m.lp.lower = lp.lower.clone();
            m.lp.upper = lp.upper.clone();
            for (k, &j) in reduced.log.col_map.iter().enumerate() {
                m.lp.lower[j] = reduced.lp.lower[k];
                m.lp.upper[j] = reduced.lp.upper[k];
            }
            for (j, v) in reduced.log.fixed_values.iter().enumerate() {
                if let Some(v) = v {
                    m.lp.lower[j] = *v;
                    m.lp.upper[j] = *v;
                }
            }
            m
        };
        let branch = match &x_full {
            Some(x) => branching_column(&node_view, x),
            None => {
                let free = node_view.free_binaries();
                free.into_iter().find(|&j| matches!(model.map.kind(j), VarKind::Commit { .. })).or_else(|| node_view.free_binaries().first().copied())
            }
        };

        let Some(j) = branch else {
            // Every binary is integral at the relaxation optimum.
            let x = x_full.as_ref().expect("integral node has a relaxation point");
            let assignment: Vec<(usize, f64)> =
                (0..model.num_cols()).filter(|&j| model.integer[j]).map(|j| (j, x[j].round())).collect();
            if let Some(inc) = search.evaluate_binaries(&assignment, IncumbentSource::Leaf) {
                search.offer(inc);
            }
            closed_bound = closed_bound.min(bound);
            log.push(entry(NodeAction::Integral, bound, search.incumbent_value()));
            continue;
        };
        log.push(entry(NodeAction::Branched, bound, search.incumbent_value()));

        let value = x_full.as_ref().map_or(0.5, |x| x[j]);
        let near = if value > 0.5 { 1.0 } else { 0.0 };
        // The child listed last is explored first while plunging.
        for v in [1.0 - near, near] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            stack.push(Node {
                id: next_id,
                parent: Some(node.id),
                depth: node.depth + 1,
                fixings,
                bound,
                warm_x: x_full.clone(),
                warm_y: y_full.clone(),
            });
            next_id += 1;
        }
    }

    let open = heap.iter().map(|q| q.0.bound).chain(stack.iter().map(|n| n.bound)).fold(f64::INFINITY, f64::min);
    let mut bound = open.min(closed_bound);
    let inc_value = search.incumbent_value();
    if let Some(z) = inc_value {
        bound = bound.min(z);
    }
    if inc_value.is_none() && status == BbStatus::Solved {
        status = BbStatus::Infeasible;
    }
    let gap = relative_gap(inc_value, bound);
    info!("branch-and-bound: {nodes} nodes, bound {bound:.8e}, incumbent {inc_value:?}, gap {gap:.3e}");
    BbResult {
        status,
        incumbent: search.incumbent,
        bound,
        gap,
        nodes,
        lp_solves: search.lp_solves,
        lp_seconds: search.lp_seconds,
        lp_iterations: search.lp_iterations,
        node_log: log,
    }
}

/// Writes the node log as CSV.
pub fn write_node_log<W: Write>(result: &BbResult, out: &mut W) -> io::Result<()> {
    writeln!(out, "node,parent,depth,bound,incumbent,action")?;
    for e in &result.node_log {
        let parent = e.parent.map_or(String::new(), |p| p.to_string());
        let inc = e.incumbent.map_or(String::new(), |z| format!("{z:e}"));
        let action = match e.action {
            NodeAction::Branched => "branched",
            NodeAction::PrunedByBound => "pruned",
            NodeAction::Infeasible => "infeasible",
            NodeAction::Integral => "integral",
        };
        writeln!(out, "{},{},{},{:e},{},{}", e.id, parent, e.depth, e.bound, inc, action)?;
    }
    Ok(())
}

//! The three-binary SCUC MILP in standard form.
//!
//! Columns per generator and period are the commitment, startup and shutdown
//! binaries `u, v, w`, the output above minimum `p′`, the production cost
//! `c`, and one column per cost segment. Every bus and period gets an
//! unserved-demand column. Transmission rows are generated only for the
//! `(line, period, case)` triples in the monitored set.

mod mps;
mod scaling;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{PtdfTable, ScucInstance};
use crate::lp::{LpBuilder, LpError, StandardFormLp};

pub use mps::{write_mps, write_mps_string};
pub use scaling::{apply_instance_scaling, scale_solution, unscale_solution, ScalingInfo};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solution vector has {found} entries but the model has {expected} columns")]
    MapMismatch { expected: usize, found: usize },
    #[error("monitored triple (line {line}, period {period}, case {case}) is outside the instance")]
    BadMonitored { line: usize, period: usize, case: usize },
    #[error("column {col} is already fixed to {existing}, cannot fix it to {requested}")]
    ConflictingFix { col: usize, existing: f64, requested: f64 },
    #[error("column {col} cannot be fixed to {value}: outside bounds [{lower}, {upper}]")]
    FixOutOfBounds { col: usize, value: f64, lower: f64, upper: f64 },
}

/// A transmission constraint `(line, period, case)`; `case = 0` is the base topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonitoredFlow {
    pub line: usize,
    pub period: usize,
    pub case: usize,
}

/// What a column means in SCUC terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Commit { g: usize, t: usize },
    Startup { g: usize, t: usize },
    Shutdown { g: usize, t: usize },
    AboveMin { g: usize, t: usize },
    Segment { g: usize, t: usize, h: usize },
    Cost { g: usize, t: usize },
    Unserved { b: usize, t: usize },
}

impl VarKind {
    pub fn is_binary(self) -> bool {
        matches!(self, VarKind::Commit { .. } | VarKind::Startup { .. } | VarKind::Shutdown { .. })
    }

    /// Measured in MW (scaled by the production factor).
    pub fn is_production(self) -> bool {
        matches!(self, VarKind::AboveMin { .. } | VarKind::Segment { .. } | VarKind::Unserved { .. })
    }
}

/// Column indices of every SCUC variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableMap {
    num_gens: usize,
    num_periods: usize,
    num_buses: usize,
    u: Vec<usize>,
    v: Vec<usize>,
    w: Vec<usize>,
    above_min: Vec<usize>,
    cost: Vec<usize>,
    /// `segments[g * T + t]` lists the segment columns of `(g, t)`.
    segments: Vec<Vec<usize>>,
    unserved: Vec<usize>,
    kinds: Vec<VarKind>,
}

impl VariableMap {
    fn gt(&self, g: usize, t: usize) -> usize {
        debug_assert!(g < self.num_gens && t < self.num_periods);
        g * self.num_periods + t
    }

    pub fn num_gens(&self) -> usize {
        self.num_gens
    }

    pub fn num_periods(&self) -> usize {
        self.num_periods
    }

    pub fn num_buses(&self) -> usize {
        self.num_buses
    }

    pub fn num_cols(&self) -> usize {
        self.kinds.len()
    }

    pub fn u(&self, g: usize, t: usize) -> usize {
        self.u[self.gt(g, t)]
    }

    pub fn v(&self, g: usize, t: usize) -> usize {
        self.v[self.gt(g, t)]
    }

    pub fn w(&self, g: usize, t: usize) -> usize {
        self.w[self.gt(g, t)]
    }

    pub fn above_min(&self, g: usize, t: usize) -> usize {
        self.above_min[self.gt(g, t)]
    }

    pub fn cost(&self, g: usize, t: usize) -> usize {
        self.cost[self.gt(g, t)]
    }

    pub fn segments(&self, g: usize, t: usize) -> &[usize] {
        &self.segments[self.gt(g, t)]
    }

    pub fn unserved(&self, b: usize, t: usize) -> usize {
        self.unserved[b * self.num_periods + t]
    }

    pub fn kind(&self, col: usize) -> VarKind {
        self.kinds[col]
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    /// All binary columns in `(g, t)` order, `u` then `v` then `w` within a pair.
    pub fn binary_columns(&self) -> Vec<usize> {
        (0..self.u.len()).flat_map(|k| [self.u[k], self.v[k], self.w[k]]).collect()
    }

    /// Total output `p′ + P^L u` of a generator in MW (model units).
    pub fn output(&self, x: &[f64], g: usize, t: usize, min_power: f64) -> f64 {
        x[self.above_min(g, t)] + min_power * x[self.u(g, t)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowFamily {
    Logic,
    StartStopExclusive,
    MinUp,
    MinDown,
    Production,
    RampUp,
    RampDown,
    SegmentLimit,
    SegmentSum,
    CostLink,
    Balance,
    FlowUpper,
    FlowLower,
}

impl RowFamily {
    fn label(self) -> &'static str {
        match self {
            RowFamily::Logic => "logic",
            RowFamily::StartStopExclusive => "start-stop",
            RowFamily::MinUp => "min-up",
            RowFamily::MinDown => "min-down",
            RowFamily::Production => "production",
            RowFamily::RampUp => "ramp-up",
            RowFamily::RampDown => "ramp-down",
            RowFamily::SegmentLimit => "segment-limit",
            RowFamily::SegmentSum => "segment-sum",
            RowFamily::CostLink => "cost-link",
            RowFamily::Balance => "balance",
            RowFamily::FlowUpper => "flow-upper",
            RowFamily::FlowLower => "flow-lower",
        }
    }
}

/// Provenance of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub family: RowFamily,
    pub period: usize,
    pub gen: Option<usize>,
    pub segment: Option<usize>,
    pub flow: Option<MonitoredFlow>,
}

impl RowTag {
    fn gen(family: RowFamily, g: usize, t: usize) -> Self {
        Self { family, period: t, gen: Some(g), segment: None, flow: None }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.label())?;
        if let Some(g) = self.gen {
            write!(f, " g={g}")?;
        }
        if let Some(h) = self.segment {
            write!(f, " h={h}")?;
        }
        if let Some(m) = self.flow {
            write!(f, " l={} c={}", m.line, m.case)?;
        }
        write!(f, " t={}", self.period + 1)
    }
}

/// A fixed binary and the fixing round that set it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedEntry {
    pub value: f64,
    pub round: usize,
}

/// SCUC MILP: standard-form LP data plus integrality and a fixing ledger.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub lp: StandardFormLp,
    pub integer: Vec<bool>,
    pub row_tags: Vec<RowTag>,
    pub map: VariableMap,
    fixed: BTreeMap<usize, FixedEntry>,
}

impl MilpModel {
    pub fn num_rows(&self) -> usize {
        self.lp.num_rows()
    }

    pub fn num_cols(&self) -> usize {
        self.lp.num_cols()
    }

    pub fn fixings(&self) -> &BTreeMap<usize, FixedEntry> {
        &self.fixed
    }

    pub fn is_fixed(&self, col: usize) -> bool {
        self.fixed.contains_key(&col)
    }

    /// Sets `x^L = x^U = value` and records the fixing. Returns `false` if the
    /// column was already fixed to the same value.
    pub fn fix(&mut self, col: usize, value: f64, round: usize) -> Result<bool, FormulationError> {
        if let Some(existing) = self.fixed.get(&col) {
            if existing.value == value {
                return Ok(false);
            }
            return Err(FormulationError::ConflictingFix { col, existing: existing.value, requested: value });
        }
        let (lower, upper) = (self.lp.lower[col], self.lp.upper[col]);
        if value < lower || value > upper {
            return Err(FormulationError::FixOutOfBounds { col, value, lower, upper });
        }
        self.lp.lower[col] = value;
        self.lp.upper[col] = value;
        self.fixed.insert(col, FixedEntry { value, round });
        Ok(true)
    }

    /// Binary columns whose bounds still allow both values.
    pub fn free_binaries(&self) -> Vec<usize> {
        (0..self.num_cols())
            .filter(|&j| self.integer[j] && self.lp.lower[j] < self.lp.upper[j])
            .collect()
    }

    pub fn num_free_binaries(&self) -> usize {
        self.free_binaries().len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.lp.objective(x)
    }

    /// Number of rows of the given family.
    pub fn count_rows(&self, family: RowFamily) -> usize {
        self.row_tags.iter().filter(|t| t.family == family).count()
    }
}

/// Builds the SCUC MILP for `instance` with flow rows for `monitored` only.
pub fn build_model(
    instance: &ScucInstance,
    ptdf: &PtdfTable,
    monitored: &BTreeSet<MonitoredFlow>,
) -> Result<MilpModel, FormulationError> {
    let t_len = instance.time_periods;
    let ng = instance.generators.len();
    let nb = instance.num_buses();
    let net = &instance.network;
    for m in monitored {
        if m.line >= net.lines.len() || m.period >= t_len || m.case >= net.num_cases() {
            return Err(FormulationError::BadMonitored { line: m.line, period: m.period, case: m.case });
        }
    }

    let mut b = LpBuilder::new();
    let mut kinds = Vec::new();
    let mut integer = Vec::new();
    let mut col = |b: &mut LpBuilder, lo: f64, hi: f64, cost: f64, kind: VarKind| {
        kinds.push(kind);
        integer.push(kind.is_binary());
        b.add_col(lo, hi, cost)
    };

    let mut u = Vec::with_capacity(ng * t_len);
    let mut v = Vec::with_capacity(ng * t_len);
    let mut w = Vec::with_capacity(ng * t_len);
    let mut above_min = Vec::with_capacity(ng * t_len);
    let mut cost = Vec::with_capacity(ng * t_len);
    let mut segments = Vec::with_capacity(ng * t_len);
    for (g, gen) in instance.generators.iter().enumerate() {
        let (cost_lo, cost_hi) = (0..gen.segments.len()).fold((0.0, 0.0), |(lo, hi), h| {
            let span = gen.segments[h].cost * gen.segment_width(h);
            (lo + span.min(0.0), hi + span.max(0.0))
        });
        for t in 0..t_len {
            u.push(col(&mut b, 0.0, 1.0, gen.min_power_cost, VarKind::Commit { g, t }));
            v.push(col(&mut b, 0.0, 1.0, 0.0, VarKind::Startup { g, t }));
            w.push(col(&mut b, 0.0, 1.0, 0.0, VarKind::Shutdown { g, t }));
            above_min.push(col(&mut b, 0.0, gen.max_power - gen.min_power, 0.0, VarKind::AboveMin { g, t }));
            cost.push(col(&mut b, cost_lo, cost_hi, 1.0, VarKind::Cost { g, t }));
            let segs = (0..gen.segments.len())
                .map(|h| col(&mut b, 0.0, gen.segment_width(h), 0.0, VarKind::Segment { g, t, h }))
                .collect();
            segments.push(segs);
        }
    }
    let mut unserved = Vec::with_capacity(nb * t_len);
    for (bi, bus) in net.buses.iter().enumerate() {
        for t in 0..t_len {
            unserved.push(col(&mut b, 0.0, bus.demand[t], net.penalty_cost, VarKind::Unserved { b: bi, t }));
        }
    }
    let map = VariableMap {
        num_gens: ng,
        num_periods: t_len,
        num_buses: nb,
        u,
        v,
        w,
        above_min,
        cost,
        segments,
        unserved,
        kinds,
    };

    let mut tags = Vec::new();
    for (g, gen) in instance.generators.iter().enumerate() {
        let u0 = if gen.initial_on { 1.0 } else { 0.0 };
        let forced = gen.forced_initial_periods();
        for t in 0..t_len {
            let (ut, vt, wt, pt) = (map.u(g, t), map.v(g, t), map.w(g, t), map.above_min(g, t));

            // u_t − u_{t−1} = v_t − w_t
            if t == 0 {
                b.add_eq(&[(ut, 1.0), (vt, -1.0), (wt, 1.0)], u0);
            } else {
                b.add_eq(&[(ut, 1.0), (map.u(g, t - 1), -1.0), (vt, -1.0), (wt, 1.0)], 0.0);
            }
            tags.push(RowTag::gen(RowFamily::Logic, g, t));
            b.add_le(&[(vt, 1.0), (wt, 1.0)], 1.0);
            tags.push(RowTag::gen(RowFamily::StartStopExclusive, g, t));

            // Σ v over the up window ≤ u_t, with the pre-horizon switch as a constant
            let start = (t + 1).saturating_sub(gen.min_up);
            let mut row: Vec<(usize, f64)> = vec![(ut, 1.0)];
            row.extend((start..=t).map(|k| (map.v(g, k), -1.0)));
            let carried_on = gen.initial_on && t < forced;
            b.add_ge(&row, if carried_on { 1.0 } else { 0.0 });
            tags.push(RowTag::gen(RowFamily::MinUp, g, t));

            let start = (t + 1).saturating_sub(gen.min_down);
            let mut row: Vec<(usize, f64)> = vec![(ut, 1.0)];
            row.extend((start..=t).map(|k| (map.w(g, k), 1.0)));
            let carried_off = !gen.initial_on && t < forced;
            b.add_le(&row, if carried_off { 0.0 } else { 1.0 });
            tags.push(RowTag::gen(RowFamily::MinDown, g, t));

            b.add_le(&[(pt, 1.0), (ut, -(gen.max_power - gen.min_power))], 0.0);
            tags.push(RowTag::gen(RowFamily::Production, g, t));

            let pl = gen.min_power;
            if t == 0 {
                b.add_le(&[(pt, 1.0), (ut, pl), (vt, -gen.startup_limit)], gen.initial_power + gen.ramp_up * u0);
                tags.push(RowTag::gen(RowFamily::RampUp, g, t));
                b.add_le(&[(pt, -1.0), (ut, -pl - gen.ramp_down), (wt, -gen.shutdown_limit)], -gen.initial_power);
                tags.push(RowTag::gen(RowFamily::RampDown, g, t));
            } else {
                let (up, pp) = (map.u(g, t - 1), map.above_min(g, t - 1));
                b.add_le(&[(pt, 1.0), (ut, pl), (pp, -1.0), (up, -pl - gen.ramp_up), (vt, -gen.startup_limit)], 0.0);
                tags.push(RowTag::gen(RowFamily::RampUp, g, t));
                b.add_le(&[(pp, 1.0), (up, pl), (pt, -1.0), (ut, -pl - gen.ramp_down), (wt, -gen.shutdown_limit)], 0.0);
                tags.push(RowTag::gen(RowFamily::RampDown, g, t));
            }

            let segs = map.segments(g, t);
            for (h, &s) in segs.iter().enumerate() {
                b.add_le(&[(s, 1.0), (ut, -gen.segment_width(h))], 0.0);
                tags.push(RowTag { segment: Some(h), ..RowTag::gen(RowFamily::SegmentLimit, g, t) });
            }
            let mut row: Vec<(usize, f64)> = segs.iter().map(|&s| (s, 1.0)).collect();
            row.push((pt, -1.0));
            b.add_eq(&row, 0.0);
            tags.push(RowTag::gen(RowFamily::SegmentSum, g, t));
            let mut row: Vec<(usize, f64)> =
                segs.iter().enumerate().map(|(h, &s)| (s, gen.segments[h].cost)).collect();
            row.push((map.cost(g, t), -1.0));
            b.add_eq(&row, 0.0);
            tags.push(RowTag::gen(RowFamily::CostLink, g, t));
        }
    }

    for t in 0..t_len {
        let mut row = Vec::new();
        for (g, gen) in instance.generators.iter().enumerate() {
            row.push((map.above_min(g, t), 1.0));
            row.push((map.u(g, t), gen.min_power));
        }
        for bi in 0..nb {
            row.push((map.unserved(bi, t), 1.0));
        }
        b.add_eq(&row, instance.total_demand(t));
        tags.push(RowTag { family: RowFamily::Balance, period: t, gen: None, segment: None, flow: None });
    }

    for m in monitored {
        if net.outaged_line(m.case) == Some(m.line) {
            // the outaged line carries no flow in its own contingency
            continue;
        }
        let deltas = &ptdf.case(m.case)[m.line];
        let mut row = Vec::new();
        let mut fixed_flow = 0.0;
        for (g, gen) in instance.generators.iter().enumerate() {
            let d = deltas[gen.bus];
            if d != 0.0 {
                row.push((map.above_min(g, m.period), d));
                row.push((map.u(g, m.period), d * gen.min_power));
            }
        }
        for (bi, bus) in net.buses.iter().enumerate() {
            let d = deltas[bi];
            if d != 0.0 {
                row.push((map.unserved(bi, m.period), d));
                fixed_flow += d * bus.demand[m.period];
            }
        }
        let limit = net.limit(m.line, m.case);
        b.add_le(&row, limit + fixed_flow);
        tags.push(RowTag { family: RowFamily::FlowUpper, period: m.period, gen: None, segment: None, flow: Some(*m) });
        b.add_ge(&row, -limit + fixed_flow);
        tags.push(RowTag { family: RowFamily::FlowLower, period: m.period, gen: None, segment: None, flow: Some(*m) });
    }

    let lp = b.build()?;
    debug_assert_eq!(tags.len(), lp.num_rows());
    Ok(MilpModel { lp, integer, row_tags: tags, map, fixed: BTreeMap::new() })
}

/// Flow on every `(line, case)` at period `t` implied by a model point.
pub fn line_flows(
    instance: &ScucInstance,
    ptdf: &PtdfTable,
    map: &VariableMap,
    x: &[f64],
    t: usize,
    case: usize,
) -> Vec<f64> {
    ptdf.flows(case, &net_injections(instance, map, x, t))
}

/// Net injection `Σ_{g∈b} p_gt − (D_bt − d^pen_bt)` per bus.
pub fn net_injections(instance: &ScucInstance, map: &VariableMap, x: &[f64], t: usize) -> Vec<f64> {
    let mut inj: Vec<f64> = instance
        .network
        .buses
        .iter()
        .enumerate()
        .map(|(bi, bus)| x[map.unserved(bi, t)] - bus.demand[t])
        .collect();
    for (g, gen) in instance.generators.iter().enumerate() {
        inj[gen.bus] += map.output(x, g, t, gen.min_power);
    }
    inj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ScucInstance;

    fn one_gen(t_len: usize) -> ScucInstance {
        let demand: Vec<f64> = (0..t_len).map(|t| 20.0 + t as f64).collect();
        let j = serde_json::json!({
            "time_periods": t_len,
            "penalty_cost": 500.0,
            "generators": [{
                "id": "g1", "bus": "b1", "min_power": 10.0, "max_power": 50.0,
                "segments": [{"max_power": 50.0, "cost": 10.0}],
                "min_power_cost": 100.0, "min_up": 2, "min_down": 2,
                "ramp_up": 40.0, "ramp_down": 40.0, "startup_limit": 20.0, "shutdown_limit": 20.0,
                "initial_status": 0, "initial_power": 0.0, "initial_periods": 5
            }],
            "buses": [{"id": "b1", "demand": demand}],
        });
        ScucInstance::from_json(&j.to_string()).unwrap()
    }

    #[test]
    fn row_count_for_one_generator_two_periods() {
        let inst = one_gen(2);
        let m = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        assert_eq!(m.num_rows(), 22);
        assert_eq!(m.integer.iter().filter(|b| **b).count(), 6);
        assert_eq!(m.count_rows(RowFamily::RampUp) + m.count_rows(RowFamily::RampDown), 4);
        assert_eq!(m.count_rows(RowFamily::FlowUpper), 0);
        assert_eq!(m.lp.num_equalities(), 2 + 2 + 2 + 2);
    }

    #[test]
    fn all_off_point_is_feasible() {
        let inst = one_gen(3);
        let m = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        let mut x = vec![0.0; m.num_cols()];
        for t in 0..3 {
            x[m.map.unserved(0, t)] = inst.network.buses[0].demand[t];
        }
        assert_eq!(m.lp.max_violation(&x), 0.0);
        let total: f64 = inst.network.buses[0].demand.iter().sum();
        assert!((m.objective(&x) - 500.0 * total).abs() < 1e-9);
    }

    #[test]
    fn variable_map_is_a_bijection() {
        let inst = one_gen(4);
        let m = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        let mut seen = vec![false; m.num_cols()];
        for t in 0..4 {
            for c in [m.map.u(0, t), m.map.v(0, t), m.map.w(0, t), m.map.above_min(0, t), m.map.cost(0, t)]
                .into_iter()
                .chain(m.map.segments(0, t).iter().copied())
                .chain([m.map.unserved(0, t)])
            {
                assert!(!seen[c]);
                seen[c] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        let bins: BTreeSet<_> = m.map.binary_columns().into_iter().collect();
        for (j, is_int) in m.integer.iter().enumerate() {
            assert_eq!(*is_int, bins.contains(&j));
        }
    }

    #[test]
    fn fixing_ledger_rejects_conflicts() {
        let inst = one_gen(2);
        let mut m = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        let u = m.map.u(0, 0);
        assert!(m.fix(u, 1.0, 1).unwrap());
        assert!(!m.fix(u, 1.0, 2).unwrap());
        assert!(matches!(m.fix(u, 0.0, 2), Err(FormulationError::ConflictingFix { .. })));
        assert_eq!(m.lp.lower[u], 1.0);
        assert_eq!(m.fixings()[&u].round, 1);
        assert_eq!(m.num_free_binaries(), 5);
    }

    #[test]
    fn row_tag_display() {
        let tag = RowTag::gen(RowFamily::RampUp, 3, 6);
        assert_eq!(tag.to_string(), "ramp-up g=3 t=7");
    }

    #[test]
    fn initial_on_time_forces_commitment() {
        let mut inst = one_gen(3);
        let g = &mut inst.generators[0];
        g.initial_on = true;
        g.initial_power = 15.0;
        g.min_up = 3;
        g.initial_periods = 1;
        let m = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        // all-off point violates the carried-over min-up rows for t = 1, 2
        let mut x = vec![0.0; m.num_cols()];
        x[m.map.w(0, 0)] = 1.0;
        for t in 0..3 {
            x[m.map.unserved(0, t)] = inst.network.buses[0].demand[t];
        }
        let act = m.lp.activity(&x);
        let violated: Vec<_> = (0..m.num_rows())
            .filter(|&i| act[i] < m.lp.rhs[i] - 1e-9 && m.lp.sense[i] == crate::lp::RowSense::Ge)
            .map(|i| m.row_tags[i].family)
            .collect();
        assert_eq!(violated.iter().filter(|f| **f == RowFamily::MinUp).count(), 2);
    }
}

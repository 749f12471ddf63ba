//! SCUC instance data: generators, network, demand and contingencies.
//!
//! Instances are loaded from JSON (see [`schema`]), validated once and
//! treated as immutable afterwards.

mod ptdf;
pub mod schema;

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use thiserror::Error;

pub use ptdf::{compute_ptdf, PtdfError, PtdfTable, PTDF_SANITY_EPS};
use schema::{BusFile, ContingencyFile, GeneratorFile, InstanceFile, LineFile, PtdfFile, SegmentFile};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("{entity}: {message}")]
    Invalid { entity: String, message: String },
    #[error("network is disconnected: bus {bus} is unreachable from {reference}")]
    Disconnected { bus: String, reference: String },
    #[error("contingency {contingency} isolates bus {bus}")]
    ContingencyIslanding { contingency: String, bus: String },
    #[error(transparent)]
    Ptdf(#[from] PtdfError),
}

fn invalid(entity: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Invalid { entity: entity.into(), message: message.into() }
}

/// One linear piece of a generator's production cost above minimum output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSegment {
    /// Cumulative breakpoint `P^U_{gh}` in MW.
    pub breakpoint: f64,
    /// `$ / MWh` on this piece.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub bus: usize,
    pub min_power: f64,
    pub max_power: f64,
    pub segments: Vec<CostSegment>,
    /// Cost of running at `min_power` for one period.
    pub min_power_cost: f64,
    pub min_up: usize,
    pub min_down: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_limit: f64,
    pub shutdown_limit: f64,
    pub initial_on: bool,
    pub initial_power: f64,
    /// Periods already spent in the initial state before `t = 1`.
    pub initial_periods: usize,
}

impl Generator {
    /// Width `P^U_{gh} − P^U_{g,h−1}` of segment `h` (with `P^U_{g,0} = P^L_g`).
    pub fn segment_width(&self, h: usize) -> f64 {
        let prev = if h == 0 { self.min_power } else { self.segments[h - 1].breakpoint };
        self.segments[h].breakpoint - prev
    }

    pub fn max_segment_cost(&self) -> f64 {
        self.segments.iter().map(|s| s.cost).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Periods at the start of the horizon during which the unit must stay in its initial state.
    pub fn forced_initial_periods(&self) -> usize {
        let needed = if self.initial_on { self.min_up } else { self.min_down };
        needed.saturating_sub(self.initial_periods)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    pub limit: f64,
    pub contingency_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub id: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub contingencies: Vec<Contingency>,
    pub reference_bus: usize,
    pub penalty_cost: f64,
}

impl Network {
    /// Thermal limit of `line` in case `case` (0 = base, `c + 1` = contingency `c`).
    pub fn limit(&self, line: usize, case: usize) -> f64 {
        if case == 0 {
            self.lines[line].limit
        } else {
            self.lines[line].contingency_limit
        }
    }

    /// Number of cases including the base case.
    pub fn num_cases(&self) -> usize {
        self.contingencies.len() + 1
    }

    /// Line removed in `case`, if any.
    pub fn outaged_line(&self, case: usize) -> Option<usize> {
        if case == 0 {
            None
        } else {
            Some(self.contingencies[case - 1].line)
        }
    }

    /// Checks that every bus is reachable from the reference bus, optionally
    /// ignoring one line. Returns the first unreachable bus.
    pub fn unreachable_bus(&self, skip_line: Option<usize>) -> Option<usize> {
        let nb = self.buses.len();
        let mut adj = vec![Vec::new(); nb];
        for (l, line) in self.lines.iter().enumerate() {
            if Some(l) == skip_line {
                continue;
            }
            adj[line.from].push(line.to);
            adj[line.to].push(line.from);
        }
        let mut seen = vec![false; nb];
        let mut queue = VecDeque::from([self.reference_bus]);
        seen[self.reference_bus] = true;
        while let Some(b) = queue.pop_front() {
            for &n in &adj[b] {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScucInstance {
    pub time_periods: usize,
    pub generators: Vec<Generator>,
    pub network: Network,
    /// Sensitivities supplied by the file; bypasses [`compute_ptdf`].
    pub ptdf_override: Option<PtdfTable>,
}

impl ScucInstance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        fs::write(path, self.to_json())
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })
    }

    pub fn num_buses(&self) -> usize {
        self.network.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.network.lines.len()
    }

    /// Generators attached to each bus.
    pub fn generators_by_bus(&self) -> Vec<Vec<usize>> {
        let mut by_bus = vec![Vec::new(); self.num_buses()];
        for (g, gen) in self.generators.iter().enumerate() {
            by_bus[gen.bus].push(g);
        }
        by_bus
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.network.buses.iter().map(|b| b.demand[t]).sum()
    }

    /// File-supplied table if present, otherwise a freshly computed one.
    pub fn ptdf(&self) -> Result<PtdfTable, PtdfError> {
        match &self.ptdf_override {
            Some(table) => Ok(table.clone()),
            None => compute_ptdf(&self.network),
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Self, InstanceError> {
        let t_len = file.time_periods;
        if t_len == 0 {
            return Err(invalid("instance", "time_periods must be at least 1"));
        }
        if !(file.penalty_cost.is_finite() && file.penalty_cost >= 0.0) {
            return Err(invalid("instance", "penalty_cost must be finite and nonnegative"));
        }
        if file.buses.is_empty() {
            return Err(invalid("instance", "at least one bus is required"));
        }

        let bus_index = index_ids(file.buses.iter().map(|b| b.id.as_str()), "bus")?;
        let mut buses = Vec::with_capacity(file.buses.len());
        for b in &file.buses {
            if b.demand.len() != t_len {
                return Err(invalid(
                    format!("bus {}", b.id),
                    format!("demand series has {} entries, expected {t_len}", b.demand.len()),
                ));
            }
            if b.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(invalid(format!("bus {}", b.id), "demand must be finite and nonnegative"));
            }
            buses.push(Bus { id: b.id.clone(), demand: b.demand.clone() });
        }

        index_ids(file.generators.iter().map(|g| g.id.as_str()), "generator")?;
        let generators = file
            .generators
            .iter()
            .map(|g| convert_generator(g, &bus_index))
            .collect::<Result<Vec<_>, _>>()?;

        let line_index = index_ids(file.lines.iter().map(|l| l.id.as_str()), "line")?;
        let mut lines = Vec::with_capacity(file.lines.len());
        for l in &file.lines {
            let entity = format!("line {}", l.id);
            let from = lookup(&bus_index, &l.from, &entity, "from bus")?;
            let to = lookup(&bus_index, &l.to, &entity, "to bus")?;
            if from == to {
                return Err(invalid(entity, "endpoints must differ"));
            }
            if !(l.reactance.is_finite() && l.reactance > 0.0) {
                return Err(invalid(entity, "reactance must be positive"));
            }
            let contingency_limit = l.contingency_limit.unwrap_or(l.limit);
            if !(l.limit.is_finite() && l.limit > 0.0 && contingency_limit.is_finite() && contingency_limit > 0.0) {
                return Err(invalid(entity, "thermal limits must be positive"));
            }
            lines.push(Line { id: l.id.clone(), from, to, reactance: l.reactance, limit: l.limit, contingency_limit });
        }

        index_ids(file.contingencies.iter().map(|c| c.id.as_str()), "contingency")?;
        let contingencies = file
            .contingencies
            .iter()
            .map(|c| {
                let line = lookup(&line_index, &c.line, &format!("contingency {}", c.id), "line")?;
                Ok(Contingency { id: c.id.clone(), line })
            })
            .collect::<Result<Vec<_>, InstanceError>>()?;

        let reference_bus = match &file.reference_bus {
            Some(id) => lookup(&bus_index, id, "instance", "reference bus")?,
            None => 0,
        };

        let network = Network { buses, lines, contingencies, reference_bus, penalty_cost: file.penalty_cost };
        if let Some(b) = network.unreachable_bus(None) {
            return Err(InstanceError::Disconnected {
                bus: network.buses[b].id.clone(),
                reference: network.buses[reference_bus].id.clone(),
            });
        }
        for c in &network.contingencies {
            if let Some(b) = network.unreachable_bus(Some(c.line)) {
                return Err(InstanceError::ContingencyIslanding {
                    contingency: c.id.clone(),
                    bus: network.buses[b].id.clone(),
                });
            }
        }

        let ptdf_override = match &file.ptdf {
            Some(p) => Some(PtdfTable::from_file(p, &network)?),
            None => None,
        };

        Ok(Self { time_periods: t_len, generators, network, ptdf_override })
    }

    pub fn to_file(&self) -> InstanceFile {
        let net = &self.network;
        let bus_id = |b: usize| net.buses[b].id.clone();
        InstanceFile {
            time_periods: self.time_periods,
            penalty_cost: net.penalty_cost,
            reference_bus: Some(bus_id(net.reference_bus)),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorFile {
                    id: g.id.clone(),
                    bus: bus_id(g.bus),
                    min_power: g.min_power,
                    max_power: g.max_power,
                    segments: g
                        .segments
                        .iter()
                        .map(|s| SegmentFile { max_power: s.breakpoint, cost: s.cost })
                        .collect(),
                    min_power_cost: g.min_power_cost,
                    min_up: g.min_up,
                    min_down: g.min_down,
                    ramp_up: g.ramp_up,
                    ramp_down: g.ramp_down,
                    startup_limit: g.startup_limit,
                    shutdown_limit: g.shutdown_limit,
                    initial_status: u8::from(g.initial_on),
                    initial_power: g.initial_power,
                    initial_periods: g.initial_periods,
                })
                .collect(),
            buses: net.buses.iter().map(|b| BusFile { id: b.id.clone(), demand: b.demand.clone() }).collect(),
            lines: net
                .lines
                .iter()
                .map(|l| LineFile {
                    id: l.id.clone(),
                    from: bus_id(l.from),
                    to: bus_id(l.to),
                    reactance: l.reactance,
                    limit: l.limit,
                    contingency_limit: (l.contingency_limit != l.limit).then_some(l.contingency_limit),
                })
                .collect(),
            contingencies: net
                .contingencies
                .iter()
                .map(|c| ContingencyFile { id: c.id.clone(), line: net.lines[c.line].id.clone() })
                .collect(),
            ptdf: self.ptdf_override.as_ref().map(PtdfTable::to_file),
        }
    }
}

fn index_ids<'a>(ids: impl Iterator<Item = &'a str>, kind: &str) -> Result<HashMap<String, usize>, InstanceError> {
    let mut map = HashMap::new();
    for (k, id) in ids.enumerate() {
        if map.insert(id.to_string(), k).is_some() {
            return Err(invalid(format!("{kind} {id}"), "duplicate id"));
        }
    }
    Ok(map)
}

fn lookup(map: &HashMap<String, usize>, id: &str, entity: &str, what: &str) -> Result<usize, InstanceError> {
    map.get(id).copied().ok_or_else(|| invalid(entity, format!("unknown {what} `{id}`")))
}

fn convert_generator(g: &GeneratorFile, bus_index: &HashMap<String, usize>) -> Result<Generator, InstanceError> {
    let entity = format!("generator {}", g.id);
    let bus = lookup(bus_index, &g.bus, &entity, "bus")?;
    let finite = [
        g.min_power,
        g.max_power,
        g.min_power_cost,
        g.ramp_up,
        g.ramp_down,
        g.startup_limit,
        g.shutdown_limit,
        g.initial_power,
    ];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(invalid(entity, "all numeric fields must be finite"));
    }
    if g.min_power < 0.0 || g.min_power > g.max_power {
        return Err(invalid(entity, "power limits must satisfy 0 <= min_power <= max_power"));
    }
    if g.min_up == 0 || g.min_down == 0 {
        return Err(invalid(entity, "minimum up/down times must be at least 1"));
    }
    if g.ramp_up < 0.0 || g.ramp_down < 0.0 {
        return Err(invalid(entity, "ramp limits must be nonnegative"));
    }
    if g.startup_limit < g.min_power {
        return Err(invalid(entity, "startup capacity below minimum power"));
    }
    if g.shutdown_limit < g.min_power {
        return Err(invalid(entity, "shutdown capacity below minimum power"));
    }
    let mut prev = g.min_power;
    for (h, s) in g.segments.iter().enumerate() {
        if !(s.max_power.is_finite() && s.cost.is_finite()) {
            return Err(invalid(&entity, format!("segment {h} must be finite")));
        }
        if s.max_power <= prev {
            return Err(invalid(&entity, format!("segment {h} breakpoint is not strictly increasing")));
        }
        prev = s.max_power;
    }
    match g.segments.last() {
        Some(last) if last.max_power != g.max_power => {
            return Err(invalid(entity, "last segment breakpoint must equal max_power"));
        }
        None if g.max_power > g.min_power => {
            return Err(invalid(entity, "segments are required when max_power exceeds min_power"));
        }
        _ => {}
    }
    let initial_on = match g.initial_status {
        0 => false,
        1 => true,
        other => return Err(invalid(entity, format!("initial_status must be 0 or 1, found {other}"))),
    };
    if g.initial_periods == 0 {
        return Err(invalid(entity, "initial_periods must be at least 1"));
    }
    if initial_on && (g.initial_power < g.min_power || g.initial_power > g.max_power) {
        return Err(invalid(entity, "initial power outside [min_power, max_power] for a committed unit"));
    }
    if !initial_on && g.initial_power != 0.0 {
        return Err(invalid(entity, "initial power must be zero for an offline unit"));
    }
    Ok(Generator {
        id: g.id.clone(),
        bus,
        min_power: g.min_power,
        max_power: g.max_power,
        segments: g.segments.iter().map(|s| CostSegment { breakpoint: s.max_power, cost: s.cost }).collect(),
        min_power_cost: g.min_power_cost,
        min_up: g.min_up,
        min_down: g.min_down,
        ramp_up: g.ramp_up,
        ramp_down: g.ramp_down,
        startup_limit: g.startup_limit,
        shutdown_limit: g.shutdown_limit,
        initial_on,
        initial_power: g.initial_power,
        initial_periods: g.initial_periods,
    })
}

impl PtdfTable {
    fn from_file(p: &PtdfFile, network: &Network) -> Result<Self, PtdfError> {
        let check = |table: &Vec<Vec<f64>>| -> Result<(), PtdfError> {
            if table.len() != network.lines.len() || table.iter().any(|r| r.len() != network.buses.len()) {
                return Err(PtdfError::Shape { lines: network.lines.len(), buses: network.buses.len() });
            }
            Ok(())
        };
        check(&p.base)?;
        if p.contingencies.len() != network.contingencies.len() {
            return Err(PtdfError::CaseCount { expected: network.contingencies.len(), found: p.contingencies.len() });
        }
        let mut cases = vec![p.base.clone()];
        for table in &p.contingencies {
            check(table)?;
            cases.push(table.clone());
        }
        Ok(PtdfTable::from_cases(cases))
    }

    fn to_file(&self) -> PtdfFile {
        PtdfFile { base: self.case(0).to_vec(), contingencies: (1..self.num_cases()).map(|c| self.case(c).to_vec()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "time_periods": 2,
            "penalty_cost": 1000.0,
            "generators": [{
                "id": "g1", "bus": "b1", "min_power": 10.0, "max_power": 50.0,
                "segments": [{"max_power": 30.0, "cost": 10.0}, {"max_power": 50.0, "cost": 20.0}],
                "min_power_cost": 100.0, "min_up": 1, "min_down": 1,
                "ramp_up": 40.0, "ramp_down": 40.0, "startup_limit": 20.0, "shutdown_limit": 20.0,
                "initial_status": 0, "initial_power": 0.0, "initial_periods": 3
            }],
            "buses": [{"id": "b1", "demand": [5.0, 6.0]}, {"id": "b2", "demand": [1.0, 1.0]}],
            "lines": [{"id": "l1", "from": "b1", "to": "b2", "reactance": 0.1, "limit": 100.0}],
            "contingencies": []
        })
    }

    #[test]
    fn loads_minimal_instance() {
        let inst = ScucInstance::from_json(&base_json().to_string()).unwrap();
        assert_eq!(inst.time_periods, 2);
        assert_eq!(inst.generators[0].segment_width(1), 20.0);
        assert_eq!(inst.network.lines[0].contingency_limit, 100.0);
        assert_eq!(inst.total_demand(1), 7.0);
    }

    #[test]
    fn startup_capacity_below_min_power() {
        let mut j = base_json();
        j["generators"][0]["startup_limit"] = 0.0.into();
        let err = ScucInstance::from_json(&j.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("startup capacity below minimum power"), "{msg}");
        assert!(msg.contains("g1"), "{msg}");
    }

    #[test]
    fn missing_field_is_schema_error() {
        let mut j = base_json();
        j["generators"][0].as_object_mut().unwrap().remove("min_up");
        assert!(matches!(ScucInstance::from_json(&j.to_string()), Err(InstanceError::Schema(_))));
    }

    #[test]
    fn wrong_demand_length() {
        let mut j = base_json();
        j["buses"][1]["demand"] = serde_json::json!([1.0]);
        let msg = ScucInstance::from_json(&j.to_string()).unwrap_err().to_string();
        assert!(msg.contains("bus b2"), "{msg}");
    }

    #[test]
    fn disconnected_network() {
        let mut j = base_json();
        j["lines"] = serde_json::json!([]);
        assert!(matches!(ScucInstance::from_json(&j.to_string()), Err(InstanceError::Disconnected { .. })));
    }

    #[test]
    fn breakpoints_must_increase_to_max() {
        let mut j = base_json();
        j["generators"][0]["segments"][1]["max_power"] = 45.0.into();
        assert!(ScucInstance::from_json(&j.to_string()).is_err());
        let mut j = base_json();
        j["generators"][0]["segments"][0]["max_power"] = 10.0.into();
        assert!(ScucInstance::from_json(&j.to_string()).is_err());
    }

    #[test]
    fn forced_initial_periods() {
        let inst = ScucInstance::from_json(&base_json().to_string()).unwrap();
        let mut g = inst.generators[0].clone();
        assert_eq!(g.forced_initial_periods(), 0);
        g.initial_on = true;
        g.min_up = 5;
        g.initial_periods = 2;
        assert_eq!(g.forced_initial_periods(), 3);
    }
}

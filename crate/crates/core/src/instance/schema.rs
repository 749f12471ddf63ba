//! On-disk JSON layout of an instance. Entities refer to each other by string id.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub time_periods: usize,
    pub penalty_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bus: Option<String>,
    pub generators: Vec<GeneratorFile>,
    pub buses: Vec<BusFile>,
    #[serde(default)]
    pub lines: Vec<LineFile>,
    #[serde(default)]
    pub contingencies: Vec<ContingencyFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptdf: Option<PtdfFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub id: String,
    pub bus: String,
    pub min_power: f64,
    pub max_power: f64,
    /// Cumulative breakpoints above `min_power`; the last one equals `max_power`.
    pub segments: Vec<SegmentFile>,
    pub min_power_cost: f64,
    pub min_up: usize,
    pub min_down: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_limit: f64,
    pub shutdown_limit: f64,
    pub initial_status: u8,
    pub initial_power: f64,
    pub initial_periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub max_power: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusFile {
    pub id: String,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineFile {
    pub id: String,
    pub from: String,
    pub to: String,
    pub reactance: f64,
    pub limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contingency_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContingencyFile {
    pub id: String,
    pub line: String,
}

/// Precomputed sensitivities, rows = lines, columns = buses (file order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtdfFile {
    pub base: Vec<Vec<f64>>,
    /// One table per contingency, in `contingencies` order.
    #[serde(default)]
    pub contingencies: Vec<Vec<Vec<f64>>>,
}

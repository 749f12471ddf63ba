//! Unit rescaling of an instance by a production factor `η^P` (MW) and a cost
//! factor `η^C` ($/MWh).
//!
//! Power quantities are divided by `η^P`, per-MWh prices are multiplied by
//! `η^P / η^C`, and per-period fixed costs are divided by `η^C`. The scaled
//! model's objective is the original objective divided by `η^C`.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{FormulationError, VarKind, VariableMap};
use crate::instance::ScucInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    /// `η^P`, MW.
    pub production: f64,
    /// `η^C`, $/MWh.
    pub cost: f64,
    pub applied: bool,
}

impl ScalingInfo {
    pub fn identity() -> Self {
        Self { production: 1.0, cost: 1.0, applied: false }
    }

    /// Original-units objective from a scaled objective value.
    pub fn unscale_objective(&self, scaled: f64) -> f64 {
        scaled * self.cost
    }

    /// Original-units value of a single column.
    pub fn unscale_value(&self, kind: VarKind, value: f64) -> f64 {
        match kind {
            k if k.is_production() => value * self.production,
            VarKind::Cost { .. } => value * self.cost,
            _ => value,
        }
    }
}

/// Rescales `instance`; see the module docs for the unit conventions.
///
/// `η^P` is the largest minimum output, falling back to the largest maximum
/// output when every unit has `P^L = 0`. `η^C` is the largest segment price.
/// A degenerate factor is left at 1 with a warning.
pub fn apply_instance_scaling(instance: &ScucInstance) -> (ScucInstance, ScalingInfo) {
    let gens = &instance.generators;
    let mut eta_p = gens.iter().map(|g| g.min_power).fold(0.0, f64::max);
    if eta_p <= 0.0 {
        eta_p = gens.iter().map(|g| g.max_power).fold(0.0, f64::max);
    }
    let eta_c = gens.iter().map(|g| g.max_segment_cost()).fold(f64::NEG_INFINITY, f64::max);
    let prod_ok = eta_p > 0.0 && eta_p.is_finite();
    let cost_ok = eta_c > 0.0 && eta_c.is_finite();
    if !prod_ok {
        warn!("production scaling skipped: no positive power limit");
    }
    if !cost_ok {
        warn!("cost scaling skipped: no positive segment cost");
    }
    let info = ScalingInfo {
        production: if prod_ok { eta_p } else { 1.0 },
        cost: if cost_ok { eta_c } else { 1.0 },
        applied: prod_ok || cost_ok,
    };
    let (ep, ec) = (info.production, info.cost);
    let price = ep / ec;

    let mut scaled = instance.clone();
    for g in &mut scaled.generators {
        g.min_power /= ep;
        g.max_power /= ep;
        g.ramp_up /= ep;
        g.ramp_down /= ep;
        g.startup_limit /= ep;
        g.shutdown_limit /= ep;
        g.initial_power /= ep;
        g.min_power_cost /= ec;
        for s in &mut g.segments {
            s.breakpoint /= ep;
            s.cost *= price;
        }
    }
    let net = &mut scaled.network;
    net.penalty_cost *= price;
    for b in &mut net.buses {
        b.demand.iter_mut().for_each(|d| *d /= ep);
    }
    for l in &mut net.lines {
        l.limit /= ep;
        l.contingency_limit /= ep;
    }
    (scaled, info)
}

/// Maps a scaled-model point back to original units.
pub fn unscale_solution(x: &[f64], info: &ScalingInfo, map: &VariableMap) -> Result<Vec<f64>, FormulationError> {
    if x.len() != map.num_cols() {
        return Err(FormulationError::MapMismatch { expected: map.num_cols(), found: x.len() });
    }
    Ok(x.iter().zip(map.kinds()).map(|(v, k)| info.unscale_value(*k, *v)).collect())
}

/// Inverse of [`unscale_solution`].
pub fn scale_solution(x: &[f64], info: &ScalingInfo, map: &VariableMap) -> Result<Vec<f64>, FormulationError> {
    if x.len() != map.num_cols() {
        return Err(FormulationError::MapMismatch { expected: map.num_cols(), found: x.len() });
    }
    Ok(x.iter().zip(map.kinds()).map(|(v, k)| v / info.unscale_value(*k, 1.0)).collect())
}

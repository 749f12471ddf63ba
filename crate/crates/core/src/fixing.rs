//! Confidence rounding, logic-consistent fixing of commitment triples, and the
//! successive-fixing loop.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::LpBackend;
use crate::formulation::{FormulationError, MilpModel, VariableMap};
use crate::instance::ScucInstance;
use crate::presolve::{lp_presolve, milp_presolve, uncrush, PresolveError};

#[derive(Debug, Error)]
pub enum FixingError {
    #[error("invalid fixing configuration: {0}")]
    Config(String),
    #[error("inconsistent fixing: {0}")]
    Inconsistent(#[from] FormulationError),
    #[error("model infeasible after fixing round {round}: {source}")]
    InfeasibleAfterFixing { round: usize, source: PresolveError },
    #[error("relaxed solution has {found} entries, model has {expected} columns")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixingConfig {
    /// Confidence threshold τ ∈ [0, 0.5).
    pub tau: f64,
    /// Number of fixing rounds R ≥ 1.
    pub rounds: usize,
}

impl Default for FixingConfig {
    fn default() -> Self {
        Self { tau: 0.1, rounds: 2 }
    }
}

impl FixingConfig {
    pub fn validate(&self) -> Result<(), FixingError> {
        if !(0.0..0.5).contains(&self.tau) {
            return Err(FixingError::Config(format!("tau = {} outside [0, 0.5)", self.tau)));
        }
        if self.rounds == 0 {
            return Err(FixingError::Config("at least one round is required".into()));
        }
        Ok(())
    }
}

/// `1` if `s ≥ 1 − τ`, `0` if `s ≤ τ`, `−1` otherwise.
pub fn round(s: f64, tau: f64) -> i8 {
    if s >= 1.0 - tau {
        1
    } else if s <= tau {
        0
    } else {
        -1
    }
}

/// Relaxed commitment values, indexed `[g][t]`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedBinaries {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    /// `u_{g,0}`.
    pub initial: Vec<bool>,
}

impl RelaxedBinaries {
    pub fn from_solution(map: &VariableMap, x: &[f64], instance: &ScucInstance) -> Result<Self, FixingError> {
        if x.len() != map.num_cols() {
            return Err(FixingError::Dimension { expected: map.num_cols(), found: x.len() });
        }
        let grid = |col: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<f64>> {
            (0..map.num_gens())
                .map(|g| (0..map.num_periods()).map(|t| x[col(g, t)].clamp(0.0, 1.0)).collect())
                .collect()
        };
        Ok(Self {
            u: grid(&|g, t| map.u(g, t)),
            v: grid(&|g, t| map.v(g, t)),
            w: grid(&|g, t| map.w(g, t)),
            initial: instance.generators.iter().map(|g| g.initial_on).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStop {
    /// Every period was consistent.
    Horizon,
    Confidence,
    Consistency,
}

/// Outcome of the scan of one generator in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorScan {
    pub generator: usize,
    /// Periods whose three rounded values are all integral.
    pub rounded_integral: usize,
    /// Consistent prefix length (periods whose triples are fixed).
    pub prefix: usize,
    /// Columns newly fixed in this round.
    pub newly_fixed: usize,
    pub stop: ScanStop,
    /// Period (0-based) where the scan stopped, if it did.
    pub stop_period: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub lp_objective: Option<f64>,
    pub lp_iterations: usize,
    pub lp_seconds: f64,
    pub presolve_fixed_cols: usize,
    pub presolve_removed_rows: usize,
    pub newly_fixed: usize,
    pub free_binaries_after: usize,
    pub skipped: bool,
    pub generators: Vec<GeneratorScan>,
}

impl RoundReport {
    pub fn broken_by_confidence(&self) -> usize {
        self.generators.iter().filter(|g| g.stop == ScanStop::Confidence).count()
    }

    pub fn broken_by_consistency(&self) -> usize {
        self.generators.iter().filter(|g| g.stop == ScanStop::Consistency).count()
    }

    pub fn rounded_integral(&self) -> usize {
        self.generators.iter().map(|g| g.rounded_integral).sum()
    }
}

/// Rounded `(u, v, w)` for the consistent prefix of one generator.
fn scan_generator(relaxed: &RelaxedBinaries, g: usize, tau: f64) -> (Vec<(i8, i8, i8)>, GeneratorScan) {
    let periods = relaxed.u[g].len();
    let ru: Vec<i8> = relaxed.u[g].iter().map(|s| round(*s, tau)).collect();
    let rv: Vec<i8> = relaxed.v[g].iter().map(|s| round(*s, tau)).collect();
    let rw: Vec<i8> = relaxed.w[g].iter().map(|s| round(*s, tau)).collect();
    let rounded_integral = (0..periods).filter(|&t| ru[t] >= 0 && rv[t] >= 0 && rw[t] >= 0).count();
    let u0 = i8::from(relaxed.initial[g]);
    let mut prefix = Vec::new();
    let mut stop = ScanStop::Horizon;
    let mut stop_period = None;
    for t in 0..periods {
        let prev = if t == 0 { u0 } else { ru[t - 1] };
        if [ru[t], prev, rv[t], rw[t]].contains(&-1) {
            stop = ScanStop::Confidence;
            stop_period = Some(t);
            break;
        }
        if ru[t] - prev == rv[t] - rw[t] && rv[t] + rw[t] <= 1 {
            prefix.push((ru[t], rv[t], rw[t]));
        } else {
            stop = ScanStop::Consistency;
            stop_period = Some(t);
            break;
        }
    }
    let scan = GeneratorScan { generator: g, rounded_integral, prefix: prefix.len(), newly_fixed: 0, stop, stop_period };
    (prefix, scan)
}

/// Fixes the consistent rounded prefix of every generator in `model`.
pub fn fixing_strategy(
    relaxed: &RelaxedBinaries,
    model: &mut MilpModel,
    tau: f64,
    round_index: usize,
) -> Result<Vec<GeneratorScan>, FixingError> {
    let scans: Vec<_> = (0..relaxed.u.len()).into_par_iter().map(|g| scan_generator(relaxed, g, tau)).collect();
    let mut out = Vec::with_capacity(scans.len());
    for (g, (prefix, mut scan)) in scans.into_iter().enumerate() {
        for (t, (u, v, w)) in prefix.into_iter().enumerate() {
            let cols = [(model.map.u(g, t), u), (model.map.v(g, t), v), (model.map.w(g, t), w)];
            for (col, val) in cols {
                if model.fix(col, f64::from(val), round_index)? {
                    scan.newly_fixed += 1;
                }
            }
        }
        out.push(scan);
    }
    Ok(out)
}

/// Runs `config.rounds` rounds of presolve, LP solve and fixing on `model`.
pub fn successive_fixing(
    model: &mut MilpModel,
    instance: &ScucInstance,
    config: &FixingConfig,
    backend: &LpBackend,
) -> Result<Vec<RoundReport>, FixingError> {
    config.validate()?;
    let mut reports = Vec::with_capacity(config.rounds);
    for r in 1..=config.rounds {
        let milp = milp_presolve(model).map_err(|source| FixingError::InfeasibleAfterFixing { round: r, source })?;
        let lp = lp_presolve(&milp.lp).map_err(|source| FixingError::InfeasibleAfterFixing { round: r, source })?;
        let sol = backend.solve(&lp.lp, None);
        let mut report = RoundReport {
            round: r,
            lp_objective: None,
            lp_iterations: sol.iterations,
            lp_seconds: sol.seconds,
            presolve_fixed_cols: milp.log.num_fixed(),
            presolve_removed_rows: milp.log.rows_removed(),
            newly_fixed: 0,
            free_binaries_after: model.num_free_binaries(),
            skipped: false,
            generators: Vec::new(),
        };
        if !sol.usable() {
            warn!("fixing round {r}: LP solve {:?}, skipping", sol.outcome);
            report.skipped = true;
            reports.push(report);
            continue;
        }
        report.lp_objective = Some(sol.objective);
        let mid = uncrush(&sol.x, &lp.log).expect("LP presolve log matches its model");
        let full = uncrush(&mid, &milp.log).expect("MILP presolve log matches its model");
        let relaxed = RelaxedBinaries::from_solution(&model.map, &full, instance)?;
        report.generators = fixing_strategy(&relaxed, model, config.tau, r)?;
        report.newly_fixed = report.generators.iter().map(|g| g.newly_fixed).sum();
        report.free_binaries_after = model.num_free_binaries();
        info!(
            "fixing round {r}: LP {:.6e}, {} columns fixed, {} free binaries left",
            sol.objective, report.newly_fixed, report.free_binaries_after
        );
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_boundaries() {
        assert_eq!(round(0.95, 0.1), 1);
        assert_eq!(round(0.9, 0.1), 1);
        assert_eq!(round(0.1, 0.1), 0);
        assert_eq!(round(0.0, 0.1), 0);
        assert_eq!(round(0.5, 0.49), -1);
        assert_eq!(round(0.5, 0.0), -1);
        assert_eq!(round(1.0, 0.0), 1);
    }

    fn relaxed(u: &[f64], v: &[f64], w: &[f64], u0: bool) -> RelaxedBinaries {
        RelaxedBinaries { u: vec![u.to_vec()], v: vec![v.to_vec()], w: vec![w.to_vec()], initial: vec![u0] }
    }

    #[test]
    fn consistent_trace_is_fully_fixed() {
        let r = relaxed(&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], true);
        let (prefix, scan) = scan_generator(&r, 0, 0.1);
        assert_eq!(prefix, vec![(1, 0, 0), (1, 0, 0), (0, 0, 1)]);
        assert_eq!(scan.stop, ScanStop::Horizon);
    }

    #[test]
    fn inconsistency_breaks_the_scan() {
        let r = relaxed(&[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], false);
        let (prefix, scan) = scan_generator(&r, 0, 0.1);
        assert_eq!(prefix.len(), 1);
        assert_eq!((scan.stop, scan.stop_period), (ScanStop::Consistency, Some(1)));
    }

    #[test]
    fn low_confidence_breaks_the_scan() {
        let r = relaxed(&[0.0, 0.5, 0.0], &[0.0; 3], &[0.0; 3], false);
        let (prefix, scan) = scan_generator(&r, 0, 0.1);
        assert_eq!(prefix.len(), 1);
        assert_eq!((scan.stop, scan.stop_period), (ScanStop::Confidence, Some(1)));
    }

    #[test]
    fn config_bounds() {
        assert!(FixingConfig { tau: 0.5, rounds: 1 }.validate().is_err());
        assert!(FixingConfig { tau: 0.0, rounds: 0 }.validate().is_err());
        assert!(FixingConfig::default().validate().is_ok());
    }
}

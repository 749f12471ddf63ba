#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scuc_core::lp::{LpBuilder, StandardFormLp};

/// Random LP with finite bounds that is feasible by construction.
pub fn random_lp(seed: u64, max_vars: usize, max_rows: usize) -> StandardFormLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut b = LpBuilder::new();
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let lo: f64 = rng.gen_range(-5.0..2.0);
        let hi = lo + rng.gen_range(0.5..8.0);
        x0.push(rng.gen_range(lo..=hi));
        b.add_col(lo, hi, rng.gen_range(-10.0..10.0));
    }
    for _ in 0..m {
        let density = rng.gen_range(0.2..0.8);
        let mut row = Vec::new();
        for (j, xj) in x0.iter().enumerate() {
            if rng.gen_bool(density) {
                row.push((j, rng.gen_range(-3.0..3.0), *xj));
            }
        }
        if row.is_empty() {
            let j = rng.gen_range(0..n);
            row.push((j, 1.0, x0[j]));
        }
        let act: f64 = row.iter().map(|(_, a, x)| a * x).sum();
        let entries: Vec<(usize, f64)> = row.iter().map(|(j, a, _)| (*j, *a)).collect();
        if rng.gen_bool(0.2) {
            b.add_eq(&entries, act);
        } else {
            b.add_ge(&entries, act - rng.gen_range(0.0..2.0));
        }
    }
    b.build().unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub mod fixing_ref;
pub mod oracle;

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> scuc_core::instance::ScucInstance {
    scuc_core::instance::ScucInstance::load(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Fixtures small enough to enumerate every commitment pattern.
pub const ENUMERABLE: [&str; 6] =
    ["three_bus", "congested_three_bus", "two_gen_six", "three_gen_four", "copper_plate", "min_updown"];

/// Every fixture that loads successfully.
pub const VALID: [&str; 8] = [
    "three_bus",
    "congested_three_bus",
    "two_gen_six",
    "three_gen_four",
    "copper_plate",
    "min_updown",
    "tight",
    "congested_ten_gen",
];

/// Every `(line, period, case)` triple of an instance.
pub fn all_flows(
    inst: &scuc_core::instance::ScucInstance,
) -> std::collections::BTreeSet<scuc_core::formulation::MonitoredFlow> {
    let mut set = std::collections::BTreeSet::new();
    for line in 0..inst.num_lines() {
        for period in 0..inst.time_periods {
            for case in 0..inst.network.num_cases() {
                set.insert(scuc_core::formulation::MonitoredFlow { line, period, case });
            }
        }
    }
    set
}

/// Model with every flow limit monitored.
pub fn full_model(inst: &scuc_core::instance::ScucInstance) -> scuc_core::formulation::MilpModel {
    scuc_core::formulation::build_model(inst, &inst.ptdf().unwrap(), &all_flows(inst)).unwrap()
}

mod common;

use common::oracle::{audit, brute_force};
use common::{fixture, ENUMERABLE, VALID};
use scuc_core::backend::LpSolverKind;
use scuc_core::driver::{run, DriverConfig, RunReport, RunStatus};
use scuc_core::Precision;

#[test]
fn driver_matches_enumeration() {
    for name in ENUMERABLE {
        let inst = fixture(name);
        let oracle = brute_force(&inst).expect("some schedule is feasible");
        let out = run(&inst, name, &DriverConfig::default()).unwrap();
        let rep = &out.report;
        assert_eq!(rep.status, RunStatus::Solved, "{name}");
        let x = out.x.as_ref().expect("schedule");
        let (viol, cost) = audit(&inst, &out.map, x);
        let obj = rep.objective.unwrap();
        assert!(viol <= 1e-5, "{name}: violation {viol}");
        assert!((cost - obj).abs() <= 1e-6 * (1.0 + obj.abs()), "{name}: audit cost {cost} vs {obj}");
        assert!(obj <= oracle.cost * (1.0 + 1e-3) + 1e-6, "{name}: {obj} vs optimum {}", oracle.cost);
        assert!(obj >= oracle.cost * (1.0 - 1e-6) - 1e-6, "{name}: {obj} below optimum {}", oracle.cost);
        for (g, row) in rep.commitment.iter().enumerate() {
            for (t, &u) in row.iter().enumerate() {
                assert_eq!(u == 1, x[out.map.u(g, t)] > 0.5);
            }
        }
    }
}

#[test]
fn final_schedules_respect_every_flow_limit() {
    for name in VALID {
        let inst = fixture(name);
        let out = run(&inst, name, &DriverConfig::default()).unwrap();
        assert_eq!(out.report.status, RunStatus::Solved, "{name}");
        let last = out.report.passes.last().unwrap();
        assert!(last.violations.is_empty(), "{name}");
        let (viol, _) = audit(&inst, &out.map, out.x.as_ref().unwrap());
        assert!(viol <= 1e-4, "{name}: violation {viol}");
    }
}

#[test]
fn filtering_adds_the_binding_line_on_the_congested_case() {
    let inst = fixture("congested_three_bus");
    let out = run(&inst, "congested_three_bus", &DriverConfig::default()).unwrap();
    let rep = &out.report;
    assert!(rep.passes.len() >= 2);
    assert_eq!(rep.passes[0].monitored, 0);
    assert!(!rep.passes[0].violations.is_empty());
    assert!(rep.monitored.iter().any(|m| inst.network.lines[m.line].id == "l13"));
    assert!(rep.passes.windows(2).all(|w| w[0].monitored <= w[1].monitored));
}

#[test]
fn unscaled_instance_gives_the_same_schedule() {
    for name in ENUMERABLE {
        let inst = fixture(name);
        let scaled = run(&inst, name, &DriverConfig::default()).unwrap().report;
        let cfg = DriverConfig { instance_scaling: false, ..DriverConfig::default() };
        let plain = run(&inst, name, &cfg).unwrap().report;
        assert!(scaled.scaling.applied && !plain.scaling.applied);
        let (a, b) = (scaled.objective.unwrap(), plain.objective.unwrap());
        assert!((a - b).abs() <= 1e-5 * b.abs(), "{name}: {a} vs {b}");
        assert_eq!(scaled.commitment, plain.commitment, "{name}");
    }
}

#[test]
fn simplex_backend_agrees() {
    let inst = fixture("three_gen_four");
    let hpr = run(&inst, "a", &DriverConfig::default()).unwrap().report;
    let cfg = DriverConfig { lp_solver: LpSolverKind::SimplexOracle, ..DriverConfig::default() };
    let spx = run(&inst, "b", &cfg).unwrap().report;
    let (a, b) = (hpr.objective.unwrap(), spx.objective.unwrap());
    assert!((a - b).abs() <= 1e-3 * b.abs());
}

#[test]
fn single_precision_runs_end_to_end() {
    let inst = fixture("two_gen_six");
    let oracle = brute_force(&inst).unwrap();
    let cfg = DriverConfig { precision: Precision::Fp32, ..DriverConfig::default() };
    let rep = run(&inst, "fp32", &cfg).unwrap().report;
    let obj = rep.objective.unwrap();
    assert!((obj - oracle.cost).abs() <= 1e-3 * oracle.cost, "{obj} vs {}", oracle.cost);
}

#[test]
fn zero_time_limit_stops_with_limit_status() {
    let inst = fixture("congested_ten_gen");
    let cfg = DriverConfig { time_limit: Some(0.0), ..DriverConfig::default() };
    let rep = run(&inst, "c", &cfg).unwrap().report;
    assert_eq!(rep.status, RunStatus::TimeLimit);
}

#[test]
fn bad_configuration_is_rejected() {
    let inst = fixture("tight");
    for cfg in [
        DriverConfig { tau: 0.5, ..DriverConfig::default() },
        DriverConfig { tau2: Some(-0.1), ..DriverConfig::default() },
        DriverConfig { rounds2: 0, ..DriverConfig::default() },
        DriverConfig { gap1: -1.0, ..DriverConfig::default() },
    ] {
        assert!(run(&inst, "bad", &cfg).is_err());
    }
}

#[test]
fn report_serializes_and_carries_metrics() {
    let inst = fixture("copper_plate");
    let cfg = DriverConfig {
        reference_objective: Some(8000.0),
        reference_time: Some(10.0),
        iteration_log: true,
        ..DriverConfig::default()
    };
    let out = run(&inst, "copper_plate", &cfg).unwrap();
    let rep = &out.report;
    let gap = rep.metrics.rel_gap_percent.unwrap();
    assert!((gap - (rep.objective.unwrap() - 8000.0) / 8000.0 * 100.0).abs() <= 1e-9);
    assert!(rep.metrics.time_ratio.unwrap() >= 0.0);
    assert!((rep.timings.lp + rep.timings.other - rep.timings.total).abs() <= 1e-9);
    let root = out.root_lp.as_ref().unwrap();
    assert!(!root.trajectory.is_empty());
    let text = serde_json::to_string(rep).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.objective, rep.objective);
    assert_eq!(back.commitment, rep.commitment);
    assert_eq!(back.passes.len(), rep.passes.len());
}

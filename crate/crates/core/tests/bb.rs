mod common;

use std::collections::BTreeSet;

use common::oracle::brute_force;
use common::{fixture, full_model, ENUMERABLE};
use scuc_core::backend::LpBackend;
use scuc_core::bb::{
    relative_gap, solve_milp, write_node_log, BbConfig, BbStatus, Incumbent, IncumbentSource, NodeAction,
};
use scuc_core::formulation::build_model;
use scuc_core::hprlp::SolverConfig;

#[test]
fn simplex_nodes_reach_the_enumerated_optimum() {
    for name in ENUMERABLE {
        let inst = fixture(name);
        let model = full_model(&inst);
        let bf = brute_force(&inst).unwrap();
        let cfg = BbConfig { gap: 1e-9, backend: LpBackend::simplex(), ..BbConfig::default() };
        let res = solve_milp(&model, &cfg, None);
        assert_eq!(res.status, BbStatus::Solved, "{name}");
        let inc = res.incumbent.as_ref().unwrap();
        assert!((inc.objective - bf.cost).abs() <= 1e-6 * bf.cost, "{name}: {} vs {}", inc.objective, bf.cost);
        assert!(res.bound <= inc.objective + 1e-9);
        assert!(res.bound >= bf.cost * (1.0 - 1e-6), "{name}: bound {} above optimum {}", res.bound, bf.cost);
        assert!(model.lp.max_violation(&inc.x) <= 1e-6);
        for &j in &model.map.binary_columns() {
            assert_eq!(inc.x[j], inc.x[j].round());
        }
    }
}

#[test]
fn hpr_nodes_stay_within_the_gap() {
    for name in ENUMERABLE {
        let inst = fixture(name);
        let model = full_model(&inst);
        let bf = brute_force(&inst).unwrap();
        let res = solve_milp(&model, &BbConfig::default(), None);
        assert_eq!(res.status, BbStatus::Solved, "{name}");
        let z = res.incumbent.as_ref().unwrap().objective;
        assert!(z <= bf.cost * (1.0 + 1e-3) + 1e-6, "{name}: {z} vs {}", bf.cost);
        assert!(z >= bf.cost * (1.0 - 1e-7), "{name}: {z} below the optimum {}", bf.cost);
        assert!(res.gap <= 1e-3);
        assert!(res.lp_solves >= res.nodes);
    }
}

#[test]
fn contradictory_commitment_is_infeasible() {
    // the slow unit is held on for two periods by its minimum up time
    let inst = fixture("min_updown");
    let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
    model.fix(model.map.u(0, 0), 0.0, 0).unwrap();
    let res = solve_milp(&model, &BbConfig::default(), None);
    assert_eq!(res.status, BbStatus::Infeasible);
    assert!(res.incumbent.is_none());
    assert_eq!(res.node_log.len(), 1);
    assert_eq!(res.node_log[0].action, NodeAction::Infeasible);
    assert_eq!(relative_gap(None, res.bound), f64::INFINITY);
}

#[test]
fn optimal_start_is_kept_and_closes_the_gap_early() {
    let inst = fixture("congested_three_bus");
    let model = full_model(&inst);
    let first = solve_milp(&model, &BbConfig { gap: 1e-9, backend: LpBackend::simplex(), ..BbConfig::default() }, None);
    let start = first.incumbent.clone().unwrap();
    let provided = Incumbent { source: IncumbentSource::Leaf, ..start.clone() };
    let again = solve_milp(&model, &BbConfig::default(), Some(provided));
    let inc = again.incumbent.unwrap();
    assert!(inc.objective <= start.objective + 1e-9);
    if inc.source == IncumbentSource::Provided {
        assert_eq!(inc.x, start.x);
    }

    // a point violating the model is dropped
    let mut bad = start.clone();
    bad.x[model.map.u(0, 0)] = 0.5;
    let res = solve_milp(&model, &BbConfig::default(), Some(bad));
    assert_ne!(res.incumbent.unwrap().source, IncumbentSource::Provided);
}

#[test]
fn node_limit_is_reported() {
    let inst = fixture("three_gen_four");
    let model = full_model(&inst);
    let cfg = BbConfig { gap: 0.0, node_limit: 1, ..BbConfig::default() };
    let res = solve_milp(&model, &cfg, None);
    assert!(res.nodes <= 1);
    assert!(matches!(res.status, BbStatus::NodeLimit | BbStatus::Solved));
    if res.status == BbStatus::NodeLimit {
        assert!(res.gap > 0.0);
    }
}

#[test]
fn node_log_is_written_as_csv() {
    let inst = fixture("three_gen_four");
    let model = full_model(&inst);
    let backend = LpBackend::hpr(SolverConfig::default());
    let res = solve_milp(&model, &BbConfig { gap: 1e-6, backend, ..BbConfig::default() }, None);
    let mut buf = Vec::new();
    write_node_log(&res, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node,parent,depth,bound,incumbent,action"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), res.node_log.len());
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1], "");
    for (row, entry) in rows.iter().zip(&res.node_log) {
        assert_eq!(row.len(), 6);
        assert_eq!(row[0].parse::<usize>().unwrap(), entry.id);
        assert_eq!(row[2].parse::<usize>().unwrap(), entry.depth);
    }
}

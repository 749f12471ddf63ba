mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::fixing_ref::{library_fixing, random_relaxed, reference_fixing, synthetic};
use common::fixture;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scuc_core::backend::LpBackend;
use scuc_core::fixing::{fixing_strategy, successive_fixing, FixingConfig, RelaxedBinaries, ScanStop};
use scuc_core::formulation::build_model;
use scuc_core::hprlp::SolverConfig;
use scuc_core::presolve::milp_presolve;
use scuc_core::simplex::{solve_simplex, SimplexStatus};

#[test]
fn fixing_matches_transcribed_pseudocode() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut fixed_total = 0;
    for case in 0..1000 {
        let gens = rng.gen_range(1..=3);
        let periods = rng.gen_range(1..=6);
        let tau = [0.0, 0.1, 0.25, 0.49][case % 4];
        let relaxed = random_relaxed(&mut rng, gens, periods, tau);
        let inst = synthetic(gens, periods, &relaxed.initial);
        let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
        let scans = fixing_strategy(&relaxed, &mut model, tau, 1).unwrap();
        let want = reference_fixing(&relaxed, tau);
        let got = library_fixing(&model, gens, periods);
        assert_eq!(got, want, "case {case}");
        fixed_total += got.len();

        for g in 0..gens {
            let periods_fixed: Vec<usize> = got.iter().filter(|e| e.0 == g).map(|e| e.1).collect();
            assert_eq!(periods_fixed, (1..=periods_fixed.len()).collect::<Vec<_>>(), "prefix, case {case}");
            assert_eq!(scans[g].prefix, periods_fixed.len());
            assert_eq!(scans[g].stop == ScanStop::Horizon, periods_fixed.len() == periods);
        }
        let mut prev: BTreeMap<usize, i8> = (0..gens).map(|g| (g, i8::from(relaxed.initial[g]))).collect();
        for &(g, _, u, v, w) in &got {
            assert_eq!(u - prev[&g], v - w, "logic, case {case}");
            assert!(v + w <= 1);
            prev.insert(g, u);
        }
    }
    assert!(fixed_total > 1000, "sampling should fix a fair number of triples ({fixed_total})");
}

#[test]
fn tau_zero_fixes_only_exact_values() {
    let relaxed = RelaxedBinaries {
        u: vec![vec![1.0, 1.0 - 1e-12, 1.0]],
        v: vec![vec![0.0, 0.0, 0.0]],
        w: vec![vec![0.0, 0.0, 0.0]],
        initial: vec![true],
    };
    let inst = synthetic(1, 3, &[true]);
    let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
    let scans = fixing_strategy(&relaxed, &mut model, 0.0, 1).unwrap();
    assert_eq!(scans[0].prefix, 1);
    assert_eq!(scans[0].stop, ScanStop::Confidence);
    assert_eq!(scans[0].stop_period, Some(1));
}

#[test]
fn integral_relaxation_is_fixed_in_one_round() {
    let inst = fixture("tight");
    let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
    let lp = solve_simplex(&model.lp, 100_000);
    assert_eq!(lp.status, SimplexStatus::Optimal);
    for j in model.map.binary_columns() {
        assert!((lp.x[j] - lp.x[j].round()).abs() <= 1e-9, "relaxation is not integral at column {j}");
    }
    let backend = LpBackend::hpr(SolverConfig::default().with_tolerance(1e-6));
    let reports = successive_fixing(&mut model, &inst, &FixingConfig { tau: 0.1, rounds: 1 }, &backend).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(model.num_free_binaries(), 0);
    assert_eq!(reports[0].free_binaries_after, 0);
    assert_eq!(reports[0].broken_by_confidence() + reports[0].broken_by_consistency(), 0);
}

#[test]
fn rounds_accumulate_without_unfixing() {
    let inst = scuc_core::formulation::apply_instance_scaling(&fixture("congested_ten_gen")).0;
    let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
    let mut cfg = SolverConfig::default().with_tolerance(1e-4);
    cfg.scaling.ruiz = false;
    let backend = LpBackend::hpr(cfg);
    let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
    let mut free = model.num_free_binaries();
    for r in 1..=3 {
        let reports = successive_fixing(&mut model, &inst, &FixingConfig { tau: 0.1, rounds: 1 }, &backend).unwrap();
        let after = model.num_free_binaries();
        assert!(after <= free, "round {r}: free binaries went up");
        assert_eq!(reports[0].free_binaries_after, after);
        for (j, e) in model.fixings() {
            if let Some(v) = seen.get(j) {
                assert_eq!(*v, e.value, "column {j} changed value");
            }
            seen.insert(*j, e.value);
        }
        free = after;
        assert!(milp_presolve(&model).is_ok());
    }
    assert!(free < model.map.binary_columns().len());
}

#[test]
fn fixing_config_is_validated() {
    let inst = fixture("tight");
    let mut model = build_model(&inst, &inst.ptdf().unwrap(), &BTreeSet::new()).unwrap();
    let backend = LpBackend::simplex();
    assert!(successive_fixing(&mut model, &inst, &FixingConfig { tau: 0.6, rounds: 1 }, &backend).is_err());
    assert!(successive_fixing(&mut model, &inst, &FixingConfig { tau: 0.1, rounds: 0 }, &backend).is_err());
}

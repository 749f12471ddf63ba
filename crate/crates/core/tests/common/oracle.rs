//! Independent reference computations for SCUC instances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use scuc_core::formulation::VariableMap;
use scuc_core::instance::ScucInstance;
use scuc_core::lp::LpBuilder;
use scuc_core::simplex::{solve_simplex, SimplexStatus};

/// `ptdf[case][line][bus]` from a dense solve of the reduced susceptance matrix.
pub fn dense_ptdf(inst: &ScucInstance) -> Vec<Vec<Vec<f64>>> {
    let net = &inst.network;
    let mut cases = vec![None];
    cases.extend(net.contingencies.iter().map(|c| Some(c.line)));
    cases
        .into_iter()
        .map(|out| {
            let nb = net.buses.len();
            let mut b = DMatrix::<f64>::zeros(nb, nb);
            for (l, line) in net.lines.iter().enumerate() {
                if Some(l) == out {
                    continue;
                }
                let s = 1.0 / line.reactance;
                b[(line.from, line.from)] += s;
                b[(line.to, line.to)] += s;
                b[(line.from, line.to)] -= s;
                b[(line.to, line.from)] -= s;
            }
            let r = net.reference_bus;
            let keep: Vec<usize> = (0..nb).filter(|&i| i != r).collect();
            let reduced = DMatrix::from_fn(keep.len(), keep.len(), |i, j| b[(keep[i], keep[j])]);
            let inv = reduced.try_inverse().expect("connected network");
            let theta = |bus: usize, k: usize| -> f64 {
                match keep.iter().position(|&x| x == k) {
                    Some(kk) if bus != r => {
                        let bb = keep.iter().position(|&x| x == bus).unwrap();
                        inv[(kk, bb)]
                    }
                    _ => 0.0,
                }
            };
            net.lines
                .iter()
                .enumerate()
                .map(|(l, line)| {
                    (0..nb)
                        .map(|bus| {
                            if Some(l) == out {
                                0.0
                            } else {
                                (theta(bus, line.from) - theta(bus, line.to)) / line.reactance
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Whether a commitment pattern `u[g][t]` respects minimum up/down times,
/// including the periods carried over from the initial state.
pub fn commitment_feasible(inst: &ScucInstance, u: &[Vec<bool>]) -> bool {
    let t_len = inst.time_periods;
    inst.generators.iter().zip(u).all(|(gen, ug)| {
        // history: the unit has been in its initial state for `initial_periods`
        let hist = gen.initial_periods;
        let mut state = gen.initial_on;
        let mut run = hist;
        for &on in ug.iter().take(t_len) {
            if on != state {
                let needed = if state { gen.min_up } else { gen.min_down };
                if run < needed {
                    return false;
                }
                state = on;
                run = 1;
            } else {
                run += 1;
            }
        }
        true
    })
}

pub struct Dispatch {
    pub cost: f64,
    /// `p[g][t]` in MW.
    pub power: Vec<Vec<f64>>,
    pub unserved: Vec<Vec<f64>>,
}

/// Cheapest dispatch for a fixed commitment with every flow limit enforced.
pub fn dispatch(inst: &ScucInstance, ptdf: &[Vec<Vec<f64>>], u: &[Vec<bool>]) -> Option<Dispatch> {
    let t_len = inst.time_periods;
    let net = &inst.network;
    let mut b = LpBuilder::new();
    let mut p = vec![vec![0usize; t_len]; inst.generators.len()];
    let mut segs = vec![vec![Vec::new(); t_len]; inst.generators.len()];
    let mut fixed_cost = 0.0;
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..t_len {
            let on = u[g][t];
            if on {
                fixed_cost += gen.min_power_cost;
            }
            let (lo, hi) = if on { (gen.min_power, gen.max_power) } else { (0.0, 0.0) };
            p[g][t] = b.add_col(lo, hi, 0.0);
            let mut row = vec![(p[g][t], 1.0)];
            for (h, seg) in gen.segments.iter().enumerate() {
                let width = if on { gen.segment_width(h) } else { 0.0 };
                let s = b.add_col(0.0, width, seg.cost);
                segs[g][t].push(s);
                row.push((s, -1.0));
            }
            b.add_eq(&row, if on { gen.min_power } else { 0.0 });
        }
    }
    let d: Vec<Vec<usize>> = net
        .buses
        .iter()
        .map(|bus| (0..t_len).map(|t| b.add_col(0.0, bus.demand[t], net.penalty_cost)).collect())
        .collect();

    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..t_len {
            let prev_on = if t == 0 { gen.initial_on } else { u[g][t - 1] };
            let on = u[g][t];
            let start = on && !prev_on;
            let stop = prev_on && !on;
            let up = if prev_on { gen.ramp_up } else { 0.0 } + if start { gen.startup_limit } else { 0.0 };
            let down = if on { gen.ramp_down } else { 0.0 } + if stop { gen.shutdown_limit } else { 0.0 };
            if t == 0 {
                b.add_le(&[(p[g][0], 1.0)], gen.initial_power + up);
                b.add_ge(&[(p[g][0], 1.0)], gen.initial_power - down);
            } else {
                b.add_le(&[(p[g][t], 1.0), (p[g][t - 1], -1.0)], up);
                b.add_le(&[(p[g][t - 1], 1.0), (p[g][t], -1.0)], down);
            }
        }
    }

    for t in 0..t_len {
        let mut row: Vec<(usize, f64)> = p.iter().map(|pg| (pg[t], 1.0)).collect();
        row.extend(d.iter().map(|db| (db[t], 1.0)));
        let demand: f64 = net.buses.iter().map(|bus| bus.demand[t]).sum();
        b.add_eq(&row, demand);
        for (c, case) in ptdf.iter().enumerate() {
            for (l, deltas) in case.iter().enumerate() {
                let mut row: Vec<(usize, f64)> =
                    inst.generators.iter().enumerate().map(|(g, gen)| (p[g][t], deltas[gen.bus])).collect();
                let mut constant = 0.0;
                for (bi, bus) in net.buses.iter().enumerate() {
                    row.push((d[bi][t], deltas[bi]));
                    constant -= deltas[bi] * bus.demand[t];
                }
                // −F ≤ Σ δ (p + d − D) ≤ F
                let limit = net.limit(l, c);
                b.add_le(&row, limit - constant);
                b.add_ge(&row, -limit - constant);
            }
        }
    }
    let lp = b.build().ok()?;
    let sol = solve_simplex(&lp, 1_000_000);
    match sol.status {
        SimplexStatus::Optimal => {}
        SimplexStatus::Infeasible => return None,
        other => panic!("dispatch LP ended with {other:?}"),
    }
    Some(Dispatch {
        cost: sol.objective + fixed_cost,
        power: p.iter().map(|pg| pg.iter().map(|&j| sol.x[j]).collect()).collect(),
        unserved: d.iter().map(|db| db.iter().map(|&j| sol.x[j]).collect()).collect(),
    })
}

pub struct BruteForce {
    pub cost: f64,
    pub commitment: Vec<Vec<bool>>,
    pub dispatch: Dispatch,
    pub patterns_feasible: usize,
}

/// Enumerates every commitment pattern (`G·T ≤ 16`).
pub fn brute_force(inst: &ScucInstance) -> Option<BruteForce> {
    let ng = inst.generators.len();
    let t_len = inst.time_periods;
    let bits = ng * t_len;
    assert!(bits <= 16, "{bits} binaries is too many to enumerate");
    let ptdf = dense_ptdf(inst);
    let decode = |mask: u32| -> Vec<Vec<bool>> {
        (0..ng).map(|g| (0..t_len).map(|t| mask >> (g * t_len + t) & 1 == 1).collect()).collect()
    };
    let results: Vec<(u32, Dispatch)> = (0..1u32 << bits)
        .into_par_iter()
        .filter_map(|mask| {
            let u = decode(mask);
            if !commitment_feasible(inst, &u) {
                return None;
            }
            dispatch(inst, &ptdf, &u).map(|d| (mask, d))
        })
        .collect();
    let feasible = results.len();
    results
        .into_iter()
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)))
        .map(|(mask, d)| BruteForce { cost: d.cost, commitment: decode(mask), dispatch: d, patterns_feasible: feasible })
}

/// Largest constraint violation (MW) of a model point `x` in original units,
/// measured against the physical rules and every flow limit, together with its
/// cost recomputed from the generator data.
pub fn audit(inst: &ScucInstance, map: &VariableMap, x: &[f64]) -> (f64, f64) {
    let ptdf = dense_ptdf(inst);
    let t_len = inst.time_periods;
    let net = &inst.network;
    let mut viol: f64 = 0.0;
    let mut cost = 0.0;
    let u: Vec<Vec<bool>> = (0..inst.generators.len())
        .map(|g| (0..t_len).map(|t| x[map.u(g, t)] > 0.5).collect())
        .collect();
    for (g, ug) in u.iter().enumerate() {
        for t in 0..t_len {
            viol = viol.max((x[map.u(g, t)] - f64::from(u8::from(ug[t]))).abs());
        }
    }
    if !commitment_feasible(inst, &u) {
        viol = f64::INFINITY;
    }
    let mut power = vec![vec![0.0; t_len]; inst.generators.len()];
    for (g, gen) in inst.generators.iter().enumerate() {
        for t in 0..t_len {
            let on = u[g][t];
            let above = x[map.above_min(g, t)];
            let pw = if on { gen.min_power + above } else { above };
            power[g][t] = pw;
            if on {
                cost += gen.min_power_cost;
                viol = viol.max(gen.min_power - pw).max(pw - gen.max_power);
            } else {
                viol = viol.max(pw.abs());
            }
            // cheapest split of the output over the ordered cost pieces
            let mut left = (pw - gen.min_power).max(0.0);
            for (h, seg) in gen.segments.iter().enumerate() {
                let take = left.min(gen.segment_width(h));
                cost += take * seg.cost;
                left -= take;
            }
            let prev_on = if t == 0 { gen.initial_on } else { u[g][t - 1] };
            let prev = if t == 0 { gen.initial_power } else { power[g][t - 1] };
            let up = if prev_on { gen.ramp_up } else { 0.0 } + if on && !prev_on { gen.startup_limit } else { 0.0 };
            let down = if on { gen.ramp_down } else { 0.0 } + if prev_on && !on { gen.shutdown_limit } else { 0.0 };
            viol = viol.max(pw - prev - up).max(prev - pw - down);
        }
    }
    for t in 0..t_len {
        let mut inj = vec![0.0; net.buses.len()];
        let mut balance = 0.0;
        for (bi, bus) in net.buses.iter().enumerate() {
            let d = x[map.unserved(bi, t)];
            viol = viol.max(-d).max(d - bus.demand[t]);
            cost += net.penalty_cost * d;
            inj[bi] += d - bus.demand[t];
            balance += d - bus.demand[t];
        }
        for (g, gen) in inst.generators.iter().enumerate() {
            inj[gen.bus] += power[g][t];
            balance += power[g][t];
        }
        viol = viol.max(balance.abs());
        for (c, case) in ptdf.iter().enumerate() {
            for (l, row) in case.iter().enumerate() {
                let flow: f64 = row.iter().zip(&inj).map(|(a, b)| a * b).sum();
                viol = viol.max(flow.abs() - net.limit(l, c));
            }
        }
    }
    (viol, cost)
}

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scuc_core::fixing::{round, RelaxedBinaries};
use scuc_core::formulation::MilpModel;
use scuc_core::instance::ScucInstance;

pub fn synthetic(gens: usize, periods: usize, initial: &[bool]) -> ScucInstance {
    let generators: Vec<_> = (0..gens)
        .map(|g| {
            serde_json::json!({
                "id": format!("g{g}"), "bus": "b", "min_power": 10.0, "max_power": 50.0,
                "segments": [{"max_power": 50.0, "cost": 10.0 + g as f64}],
                "min_power_cost": 50.0, "min_up": 1, "min_down": 1,
                "ramp_up": 50.0, "ramp_down": 50.0, "startup_limit": 50.0, "shutdown_limit": 50.0,
                "initial_status": u8::from(initial[g]), "initial_power": if initial[g] { 20.0 } else { 0.0 },
                "initial_periods": 4
            })
        })
        .collect();
    let j = serde_json::json!({
        "time_periods": periods,
        "penalty_cost": 1000.0,
        "generators": generators,
        "buses": [{"id": "b", "demand": vec![30.0; periods]}],
    });
    ScucInstance::from_json(&j.to_string()).unwrap()
}

/// The fixing pseudocode transcribed with 1-based periods; returns `(g, t, u, v, w)` for every fixed triple.
pub fn reference_fixing(relaxed: &RelaxedBinaries, tau: f64) -> BTreeSet<(usize, usize, i8, i8, i8)> {
    let mut out = BTreeSet::new();
    let gens = relaxed.u.len();
    for g in 0..gens {
        let big_t = relaxed.u[g].len();
        // round every period; index 0 holds u_{g,0}
        let mut uh = vec![if relaxed.initial[g] { 1 } else { 0 }];
        let mut vh = vec![0];
        let mut wh = vec![0];
        for t in 1..=big_t {
            uh.push(round(relaxed.u[g][t - 1], tau));
            vh.push(round(relaxed.v[g][t - 1], tau));
            wh.push(round(relaxed.w[g][t - 1], tau));
        }
        // consistency scan from t = 1
        let mut t = 1;
        while t <= big_t {
            if uh[t] == -1 || uh[t - 1] == -1 || vh[t] == -1 || wh[t] == -1 {
                break;
            } else if uh[t] - uh[t - 1] == vh[t] - wh[t] && vh[t] + wh[t] <= 1 {
                out.insert((g, t, uh[t], vh[t], wh[t]));
            } else {
                break;
            }
            t += 1;
        }
    }
    out
}

pub fn library_fixing(model: &MilpModel, gens: usize, periods: usize) -> BTreeSet<(usize, usize, i8, i8, i8)> {
    let f = model.fixings();
    let mut out = BTreeSet::new();
    for g in 0..gens {
        for t in 0..periods {
            let get = |j: usize| f.get(&j).map(|e| e.value as i8);
            match (get(model.map.u(g, t)), get(model.map.v(g, t)), get(model.map.w(g, t))) {
                (Some(u), Some(v), Some(w)) => {
                    out.insert((g, t + 1, u, v, w));
                }
                (None, None, None) => {}
                partial => panic!("partially fixed triple at ({g}, {t}): {partial:?}"),
            }
        }
    }
    out
}

pub fn sample(rng: &mut ChaCha8Rng, exact: f64, tau: f64) -> f64 {
    let eps = 1e-7;
    match rng.gen_range(0..14) {
        0..=8 => exact,
        9 => if exact > 0.5 { 1.0 - tau } else { tau },
        10 => if exact > 0.5 { 1.0 - tau - eps } else { tau + eps },
        11 => 0.5,
        _ => rng.gen_range(0.0..=1.0),
    }
}

pub fn random_relaxed(rng: &mut ChaCha8Rng, gens: usize, periods: usize, tau: f64) -> RelaxedBinaries {
    let initial: Vec<bool> = (0..gens).map(|_| rng.gen_bool(0.5)).collect();
    let mut relaxed = RelaxedBinaries { u: vec![], v: vec![], w: vec![], initial: initial.clone() };
    for &u0 in initial.iter() {
        let mut prev = u0;
        let (mut u, mut v, mut w) = (vec![], vec![], vec![]);
        for _ in 0..periods {
            let on = rng.gen_bool(0.6);
            let (vs, ws) = (on && !prev, prev && !on);
            // occasionally break the logic on purpose
            let flip = rng.gen_bool(0.05);
            let b = |x: bool| f64::from(u8::from(x));
            u.push(sample(rng, b(on), tau));
            v.push(sample(rng, b(vs ^ flip), tau));
            w.push(sample(rng, b(ws), tau));
            prev = on;
        }
        relaxed.u.push(u);
        relaxed.v.push(v);
        relaxed.w.push(w);
    }
    relaxed
}

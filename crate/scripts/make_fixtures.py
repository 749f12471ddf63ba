#!/usr/bin/env python3
"""Writes the JSON instances under crates/core/fixtures."""

import copy
import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def gen(gid, bus, pmin, pmax, segs, cl, ut, dt, ramp, su, sd, on, p0, periods):
    return {
        "id": gid, "bus": bus, "min_power": pmin, "max_power": pmax,
        "segments": [{"max_power": m, "cost": c} for m, c in segs],
        "min_power_cost": cl, "min_up": ut, "min_down": dt,
        "ramp_up": ramp, "ramp_down": ramp, "startup_limit": su, "shutdown_limit": sd,
        "initial_status": 1 if on else 0, "initial_power": p0, "initial_periods": periods,
    }


def line(lid, a, b, x, limit, climit=None):
    d = {"id": lid, "from": a, "to": b, "reactance": x, "limit": limit}
    if climit is not None:
        d["contingency_limit"] = climit
    return d


def triangle(limit13, climit13):
    return [
        line("l12", "b1", "b2", 0.1, 300.0),
        line("l23", "b2", "b3", 0.1, 300.0),
        line("l13", "b1", "b3", 0.1, limit13, climit13),
    ]


def three_bus():
    return {
        "time_periods": 4,
        "penalty_cost": 5000.0,
        "reference_bus": "b1",
        "generators": [
            gen("g1", "b1", 50.0, 200.0, [(120.0, 20.0), (200.0, 30.0)], 500.0, 2, 2, 100.0, 100.0, 100.0, True, 100.0, 3),
            gen("g2", "b2", 20.0, 100.0, [(60.0, 40.0), (100.0, 55.0)], 200.0, 1, 1, 80.0, 60.0, 60.0, False, 0.0, 2),
        ],
        "buses": [
            {"id": "b1", "demand": [0.0, 0.0, 0.0, 0.0]},
            {"id": "b2", "demand": [20.0, 30.0, 30.0, 20.0]},
            {"id": "b3", "demand": [120.0, 180.0, 240.0, 150.0]},
        ],
        "lines": triangle(200.0, 250.0),
        "contingencies": [{"id": "c12", "line": "l12"}],
    }


def congested_three_bus():
    inst = three_bus()
    inst["generators"] = [
        gen("g1", "b1", 40.0, 250.0, [(150.0, 15.0), (250.0, 18.0)], 300.0, 1, 1, 150.0, 150.0, 150.0, True, 100.0, 2),
        gen("g2", "b3", 10.0, 120.0, [(60.0, 45.0), (120.0, 60.0)], 170.0, 1, 1, 100.0, 80.0, 80.0, False, 0.0, 2),
    ]
    inst["buses"] = [
        {"id": "b1", "demand": [0.0, 0.0, 0.0, 0.0]},
        {"id": "b2", "demand": [10.0, 10.0, 10.0, 10.0]},
        {"id": "b3", "demand": [90.0, 150.0, 200.0, 120.0]},
    ]
    inst["lines"] = triangle(80.0, 160.0)
    return inst


def invalid_startup():
    inst = three_bus()
    inst["generators"][1]["startup_limit"] = 0.0
    return inst


def islanding():
    inst = three_bus()
    inst["lines"] = [line("l12", "b1", "b2", 0.1, 300.0), line("l23", "b2", "b3", 0.1, 300.0)]
    inst["contingencies"] = [{"id": "c23", "line": "l23"}]
    return inst


def two_gen_six():
    return {
        "time_periods": 6,
        "penalty_cost": 3000.0,
        "generators": [
            gen("base", "n1", 60.0, 180.0, [(120.0, 18.0), (180.0, 26.0)], 700.0, 3, 2, 60.0, 90.0, 90.0, True, 90.0, 4),
            gen("peak", "n2", 15.0, 80.0, [(50.0, 45.0), (80.0, 70.0)], 120.0, 1, 1, 65.0, 40.0, 40.0, False, 0.0, 1),
        ],
        "buses": [
            {"id": "n1", "demand": [40.0, 50.0, 70.0, 80.0, 60.0, 30.0]},
            {"id": "n2", "demand": [50.0, 70.0, 110.0, 130.0, 80.0, 40.0]},
        ],
        "lines": [line("l", "n1", "n2", 0.05, 150.0)],
    }


def three_gen_four():
    return {
        "time_periods": 4,
        "penalty_cost": 4000.0,
        "reference_bus": "a",
        "generators": [
            gen("g1", "a", 30.0, 150.0, [(90.0, 22.0), (150.0, 28.0)], 350.0, 2, 1, 80.0, 80.0, 80.0, True, 60.0, 2),
            gen("g2", "c", 20.0, 90.0, [(60.0, 30.0), (90.0, 38.0)], 180.0, 1, 2, 70.0, 50.0, 50.0, False, 0.0, 3),
            gen("g3", "d", 10.0, 60.0, [(60.0, 55.0)], 400.0, 1, 1, 60.0, 40.0, 40.0, False, 0.0, 1),
        ],
        "buses": [
            {"id": "a", "demand": [0.0, 0.0, 0.0, 0.0]},
            {"id": "b", "demand": [50.0, 70.0, 90.0, 60.0]},
            {"id": "c", "demand": [30.0, 40.0, 60.0, 40.0]},
            {"id": "d", "demand": [20.0, 40.0, 50.0, 30.0]},
        ],
        "lines": [
            line("ab", "a", "b", 0.08, 120.0, 150.0),
            line("bc", "b", "c", 0.10, 100.0, 130.0),
            line("cd", "c", "d", 0.12, 80.0, 110.0),
            line("da", "d", "a", 0.09, 100.0, 130.0),
        ],
        "contingencies": [{"id": "x-ab", "line": "ab"}, {"id": "x-cd", "line": "cd"}],
    }


def copper_plate():
    return {
        "time_periods": 3,
        "penalty_cost": 2500.0,
        "generators": [
            gen("coal", "s", 80.0, 200.0, [(150.0, 16.0), (200.0, 21.0)], 900.0, 2, 2, 70.0, 100.0, 100.0, True, 120.0, 5),
            gen("ccgt", "s", 40.0, 140.0, [(100.0, 27.0), (140.0, 33.0)], 400.0, 1, 1, 90.0, 70.0, 70.0, False, 0.0, 3),
            gen("ocgt", "s", 5.0, 50.0, [(50.0, 80.0)], 450.0, 1, 1, 50.0, 30.0, 30.0, False, 0.0, 1),
        ],
        "buses": [{"id": "s", "demand": [150.0, 260.0, 190.0]}],
    }


def min_updown():
    return {
        "time_periods": 5,
        "penalty_cost": 3500.0,
        "generators": [
            gen("slow", "p", 50.0, 160.0, [(110.0, 20.0), (160.0, 24.0)], 600.0, 3, 3, 60.0, 80.0, 80.0, True, 70.0, 1),
            gen("quick", "q", 10.0, 70.0, [(40.0, 35.0), (70.0, 48.0)], 130.0, 2, 3, 60.0, 30.0, 30.0, False, 0.0, 1),
        ],
        "buses": [
            {"id": "p", "demand": [30.0, 20.0, 20.0, 60.0, 80.0]},
            {"id": "q", "demand": [40.0, 30.0, 40.0, 90.0, 100.0]},
        ],
        "lines": [line("pq", "p", "q", 0.07, 90.0)],
    }


def tight():
    return {
        "time_periods": 3,
        "penalty_cost": 10000.0,
        "generators": [
            gen("only", "z", 50.0, 100.0, [(100.0, 20.0)], 100.0, 1, 1, 100.0, 100.0, 100.0, True, 100.0, 1),
        ],
        "buses": [{"id": "z", "demand": [100.0, 100.0, 100.0]}],
    }


def congested_ten_gen(seed=7):
    rng = random.Random(seed)
    buses = [f"b{i}" for i in range(1, 7)]
    edges = [("b1", "b2"), ("b2", "b3"), ("b3", "b4"), ("b4", "b5"), ("b5", "b6"), ("b6", "b1"), ("b2", "b5"), ("b3", "b6")]
    lines = []
    for k, (a, b) in enumerate(edges):
        x = round(rng.uniform(0.05, 0.15), 3)
        limit = 170.0 if (a, b) in {("b1", "b2"), ("b6", "b1")} else 220.0
        lines.append(line(f"l{k + 1}", a, b, x, limit, limit * 1.25))
    gens = []
    for g in range(10):
        bus = "b1" if g < 4 else rng.choice(buses[1:])
        cheap = g < 4
        pmax = rng.choice([120.0, 150.0, 180.0]) if cheap else rng.choice([60.0, 80.0, 100.0])
        pmin = round(pmax * rng.uniform(0.2, 0.3), 1)
        c1 = round(rng.uniform(12.0, 18.0) if cheap else rng.uniform(30.0, 45.0), 2)
        c2 = round(c1 * rng.uniform(1.1, 1.3), 2)
        mid = round(pmin + 0.6 * (pmax - pmin), 1)
        cl = round(rng.uniform(300.0, 600.0) if cheap else rng.uniform(80.0, 200.0), 1)
        ut = rng.randint(3, 6) if cheap else rng.randint(1, 3)
        dt = rng.randint(2, 5) if cheap else rng.randint(1, 2)
        ramp = round(pmax * rng.uniform(0.4, 0.7), 1)
        su = max(pmin, round(pmax * 0.5, 1))
        on = g < 3
        gens.append(gen(f"g{g + 1}", bus, pmin, pmax, [(mid, c1), (pmax, c2)], cl, ut, dt, ramp, su, su,
                        on, round(pmin + 0.2 * (pmax - pmin), 1) if on else 0.0, rng.randint(1, 6)))
    profile = [0.62, 0.58, 0.55, 0.54, 0.56, 0.63, 0.74, 0.85, 0.93, 0.97, 1.0, 0.99,
               0.96, 0.94, 0.93, 0.95, 0.98, 1.0, 0.97, 0.9, 0.82, 0.75, 0.69, 0.64]
    share = {"b1": 0.0, "b2": 0.22, "b3": 0.2, "b4": 0.25, "b5": 0.18, "b6": 0.15}
    peak = 560.0
    bus_list = [{"id": b, "demand": [round(peak * share[b] * p * rng.uniform(0.97, 1.03), 1) for p in profile]}
                for b in buses]
    return {
        "time_periods": 24,
        "penalty_cost": 1000.0,
        "reference_bus": "b1",
        "generators": gens,
        "buses": bus_list,
        "lines": lines,
        "contingencies": [{"id": "c-l3", "line": "l3"}, {"id": "c-l7", "line": "l7"}],
    }


FIXTURES = {
    "three_bus.json": three_bus,
    "congested_three_bus.json": congested_three_bus,
    "invalid_startup.json": invalid_startup,
    "islanding_contingency.json": islanding,
    "two_gen_six.json": two_gen_six,
    "three_gen_four.json": three_gen_four,
    "copper_plate.json": copper_plate,
    "min_updown.json": min_updown,
    "tight.json": tight,
    "congested_ten_gen.json": congested_ten_gen,
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, make in FIXTURES.items():
        (OUT / name).write_text(json.dumps(make(), indent=2) + "\n")
        print(name)


if __name__ == "__main__":
    main()

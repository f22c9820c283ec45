"""End-to-end reproductions of the two plane-with-rays counterexamples."""
from __future__ import annotations

import itertools

import numpy as np

from .bmaps import (check_basetriangle_stable, check_two_stable, even_flip_map, pair_contraction,
                    unbounded_growth)
from .spaces import SpaceError, plane_space, ray_sort_key

TOL = 0.15

EXAMPLE_A = {"trunc": 20.0, "pitch": 0.25, "index_max": 4, "growth_index_max": 7, "growth_n": [1, 2, 3],
             "sweep": [10.0, 20.0, 40.0], "sweep_pitch": 0.5, "N0": 0.5, "C_grid": [0.0, 1.0, 2.0, 4.0],
             "center_samples": 9}
EXAMPLE_B = {"sweep": [10.0, 20.0, 40.0], "sweep_pitch": 1.0, "N0": 2.0, "C_grid": [0.0, 1.0, 2.0, 4.0],
             "table_trunc": [20.0, 40.0], "center_samples": 9}


def _space(preset, trunc, pitch, index_max=None):
    desc = {"type": "plane_with_rays", "preset": preset, "truncation_radius": trunc, "pitch": pitch}
    if index_max is not None:
        desc["ray_index_max"] = index_max
    return plane_space(desc)


def contraction_table(space, labels=None):
    labels = sorted(labels or [r.label for r in space.rays], key=ray_sort_key)
    return [{"pair": [p, q], "contraction": pair_contraction(space, p, q)}
            for p, q in itertools.combinations(labels, 2)]


def growth_law(space, ns):
    rows = [{"n": n, "pair": [f"r_{-2 * n}", f"r_{2 * n + 1}"],
             "contraction": pair_contraction(space, f"r_{-2 * n}", f"r_{2 * n + 1}"),
             "expected": 4 * n + 1} for n in ns]
    slope, icpt = np.polyfit([r["n"] for r in rows], [r["contraction"] for r in rows], 1)
    return rows, float(slope), float(icpt)


def two_stable_sweep(preset, truncs, pitch):
    rows = []
    for T in truncs:
        X = _space(preset, T, pitch)
        rep = check_two_stable(even_flip_map(X))
        rows.append({"trunc": T, "growth": rep.constants["growth"], "worst": rep.worst_witness,
                     "pairs": rep.sample_count})
    growth = [r["growth"] for r in rows]
    return rows, unbounded_growth(growth)


def _table(rep):
    return [{"C": r["C"], "source_level": r["source_level"], "N_prime": r["N_prime"]} for r in rep.table]


def example_a(config=None) -> dict:
    cfg = {**EXAMPLE_A, **(config or {})}
    X = _space("A", cfg["trunc"], cfg["pitch"], cfg["index_max"])
    table = contraction_table(X)
    half = 0.5 * (1 + TOL)
    small = [r["pair"] for r in table if r["contraction"] <= half]

    G = _space("A", cfg["trunc"], cfg["pitch"], cfg["growth_index_max"])
    growth_rows, slope, icpt = growth_law(G, cfg["growth_n"])

    sweep, unbounded = two_stable_sweep("A", cfg["sweep"], cfg["sweep_pitch"])

    bt = check_basetriangle_stable(even_flip_map(X), cfg["N0"], cfg["C_grid"],
                                   center_samples=cfg["center_samples"])
    bt_rows = _table(bt)
    bounded = bool(bt_rows) and all(r["N_prime"] <= (1 + TOL) * (r["C"] + 1) for r in bt_rows)

    verdicts = {
        "three_small_geodesics": sorted(map(sorted, small)) == sorted(map(sorted, [["r_0", "r'"], ["r_0", "r''"], ["r'", "r''"]])),
        "growth_slope_ok": abs(slope - 4) <= 0.6,
        "not_two_stable": unbounded,
        "basetriangle_C_plus_1": bounded,
    }
    summary = f"not 2-stable: growth 4n+1 (fitted slope {slope:.3f})" if unbounded else "2-stability not refuted"
    return {"example": "exampleA", "config": cfg, "contraction_table": table, "small_pairs": small,
            "growth_law": growth_rows, "slope": slope, "intercept": icpt, "two_stable_sweep": sweep,
            "basetriangle": {"triples": bt.flags.get("triples", []), "table": bt_rows},
            "verdicts": verdicts, "summary": summary}


def example_b(config=None) -> dict:
    cfg = {**EXAMPLE_B, **(config or {})}
    sweep, unbounded = two_stable_sweep("B", cfg["sweep"], cfg["sweep_pitch"])
    tables = []
    for T in cfg["table_trunc"]:
        X = _space("B", T, cfg["sweep_pitch"])
        rep = check_basetriangle_stable(even_flip_map(X), cfg["N0"], cfg["C_grid"],
                                        center_samples=cfg["center_samples"])
        tables.append({"trunc": T, "triples": rep.flags.get("triples", []), "table": _table(rep),
                       "empty": rep.flags.get("empty", False)})
    stable = all(not t["empty"] for t in tables)
    if stable:
        # N'(C) must not grow with the truncation radius
        for a, b in zip(tables[:-1], tables[1:]):
            for ra, rb in zip(a["table"], b["table"]):
                stable &= rb["N_prime"] <= (1 + TOL) * ra["N_prime"] + 1e-9
    verdicts = {"basetriangle_stable": bool(stable), "not_two_stable": unbounded}
    summary = ("basetriangle stable and not 2-stable" if stable and unbounded else
               f"basetriangle_stable={bool(stable)}, not_two_stable={unbounded}")
    return {"example": "exampleB", "config": cfg, "two_stable_sweep": sweep, "basetriangle": tables,
            "verdicts": verdicts, "summary": summary}


EXAMPLES = {"exampleA": example_a, "exampleB": example_b}


def run_example(example_id: str, config=None) -> dict:
    if example_id not in EXAMPLES:
        raise SpaceError(f"unknown example id {example_id!r}; choose from {sorted(EXAMPLES)}")
    return EXAMPLES[example_id](config)

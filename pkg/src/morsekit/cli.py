"""Command-line front end: ``morsekit analyze | extend | repro``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bmaps import (MapError, even_flip_map, identity_map, load_map, reflection_map, scrambled_map,
                    unbounded_growth)
from .boundary import boundary_stratum, dist_gp_gap, gp_slack_violation
from .extension import (ExtensionError, boundary_agreement, eta_modulus, extend, fit_qi_constants,
                        quasi_inverse_defect)
from .hyperbolicity import four_point_delta
from .morse import GaugeTable, morse_gauge_lower
from .repro import EXAMPLES, contraction_table, run_example
from .reports import write_csv, write_report
from .spaces import PlaneRaysSpace, SpaceError, build_space, ray_sort_key

CAYLEY = ("F2", "Z2", "Z2_star_Z")
PLANES = {"planeA": "A", "planeB": "B"}
MAPS = {"identity": identity_map, "reflection": reflection_map, "even_flip": even_flip_map}
DELTA_CAP = 300


def _desc(args, trunc=None) -> dict:
    if args.preset in CAYLEY:
        return {"type": "cayley", "preset": args.preset, "radius": args.radius}
    desc = {"type": "plane_with_rays", "preset": PLANES[args.preset],
            "truncation_radius": args.trunc if trunc is None else trunc, "pitch": args.pitch}
    if args.index_max is not None:
        desc["ray_index_max"] = args.index_max
    return desc


def _space_arg(args, path_attr="space", trunc=None):
    path = getattr(args, path_attr, None)
    if path:
        return build_space(path), {"space_file": str(path)}
    if args.preset is None:
        raise SpaceError("give a space description file or --preset")
    desc = _desc(args, trunc)
    return build_space(desc), desc


def _grid(text):
    if text is None:
        return None
    try:
        cells = json.loads(text)
        return [(float(K), float(C)) for K, C in cells]
    except (ValueError, TypeError) as exc:
        raise SpaceError(f"--grid must be a JSON list of [K, C] pairs: {exc}") from None


def _basepoint(space) -> int:
    if isinstance(space, PlaneRaysSpace):
        hit = np.nonzero((space.rid < 0) & (np.abs(space.px) < 1e-9) & (np.abs(space.py) < 1e-9))[0]
        return int(hit[0])
    return 0


def _delta_points(space) -> np.ndarray:
    if space.n <= DELTA_CAP:
        return np.arange(space.n)
    return np.unique(np.linspace(0, space.n - 1, DELTA_CAP).round().astype(np.int64))


def _set_jobs(jobs):
    if jobs:
        import numba
        numba.set_num_threads(max(1, min(int(jobs), numba.config.NUMBA_NUM_THREADS)))


def cmd_analyze(args) -> int:
    space, desc = _space_arg(args)
    config = {"command": "analyze", "space": desc, "grid": args.grid, "budget": args.budget,
              "seed": args.seed, "level": args.level}
    grid = _grid(args.grid)
    pts = _delta_points(space)
    dres = four_point_delta(space, pts)
    x0 = _basepoint(space)
    result = {"n": space.n, "kind": space.kind, "truncation_radius": space.truncation_radius,
              "delta": dres.delta, "delta_points": int(len(pts)), "delta_witness": dres.witness,
              "basepoint": x0}
    rays = sorted((r.label for r in space.rays), key=ray_sort_key)
    if isinstance(space, PlaneRaysSpace):
        table = contraction_table(space, rays)
        result["contraction_table"] = table
        write_csv(Path(args.out) / "contraction.csv", ["p", "q", "contraction"],
                  [(r["pair"][0], r["pair"][1], r["contraction"]) for r in table])
    far = int(np.argmax(space.dist_block([x0], np.arange(space.n))[0]))
    g = space.geodesic(x0, far)
    result["gauge"] = morse_gauge_lower(space, g, grid, budget=args.budget, seed=args.seed).to_dict()
    if len(rays) >= 2:
        gauge = GaugeTable.from_contraction(args.level, grid) if grid else GaugeTable.from_contraction(args.level)
        st = boundary_stratum(space, x0, gauge, rays, budget=min(args.budget, 200), seed=args.seed)
        result["stratum"] = st.to_dict()
        result["gp_slack_violation"] = gp_slack_violation(st)
        result["dist_gp_gap"] = {f"{p}|{q}": dist_gp_gap(space, x0, p, q)
                                 for i, p in enumerate(st.members) for q in st.members[i + 1:]}
    path = write_report(args.out, "analyze", "analyze", config, result)
    print(f"delta={dres.delta:g} n={space.n} report={path}")
    return 0


def _map(args, X, Y):
    if args.map:
        return load_map(X, Y, args.map)
    if args.map_kind == "scrambled":
        return scrambled_map(X, args.seed)
    if Y is not X:
        raise MapError(f"--map-kind {args.map_kind} needs a single space; pass --map for two spaces")
    return MAPS[args.map_kind](X)


def _extension_report(f, N0):
    ext = extend(f, config={"N0": N0})
    qi = fit_qi_constants(ext)
    eta = eta_modulus(ext)
    inv = extend(f.inverse(), config={"N0": N0})
    defect = quasi_inverse_defect(ext, inv)
    agree = boundary_agreement(ext, f)
    return ext, {"R": ext.R, "center_diameter": ext.center_diameter, "N0": ext.N0_label, "N1": ext.N1_label,
                 "qi": qi.to_dict(), "eta": eta.to_dict(), "eta_R": eta(ext.R),
                 "quasi_inverse_defect": {"defect": defect.defect, "witness": defect.worst,
                                          "skipped": defect.skipped},
                 "boundary_agreement": agree}


def cmd_extend(args) -> int:
    X, sdesc = _space_arg(args)
    if args.target:
        Y, tdesc = build_space(args.target), {"space_file": str(args.target)}
    else:
        Y, tdesc = X, sdesc
    config = {"command": "extend", "source": sdesc, "target": tdesc, "map": args.map,
              "map_kind": None if args.map else args.map_kind, "N0": args.N0, "seed": args.seed,
              "sweep": args.sweep}
    f = _map(args, X, Y)
    ext, result = _extension_report(f, args.N0)
    result["map"] = f.to_dict()
    result["values"] = [[int(x), int(y)] for x, y in sorted(ext.values.items())]
    if args.sweep:
        if args.space or args.preset not in PLANES:
            raise SpaceError("--sweep needs a plane preset")
        rows = []
        for T in args.sweep:
            Xs = build_space(_desc(args, T))
            fs = scrambled_map(Xs, args.seed) if args.map_kind == "scrambled" else MAPS[args.map_kind](Xs)
            e = extend(fs, config={"N0": args.N0})
            q = fit_qi_constants(e)
            # the additive error of any extension scales with R, so growth is read
            # off the center skeleton with a fixed additive allowance
            qc = fit_qi_constants(e, e.source_index.centers, C_cap=2 * e.center_diameter)
            rows.append({"trunc": T, "K": q.K, "C": q.C, "R": e.R, "K_centers": qc.K})
        Ks = [r["K_centers"] for r in rows]
        result["sweep"] = {"rows": rows,
                           "non_qi_evidence": unbounded_growth(Ks, 1.5, max(1, min(2, len(Ks) - 1)))}
        write_csv(Path(args.out) / "sweep.csv", ["trunc", "K", "C", "R", "K_centers"],
                  [(r["trunc"], r["K"], r["C"], r["R"], r["K_centers"]) for r in rows])
    write_csv(Path(args.out) / "eta.csv", ["theta", "eta"], zip(result["eta"]["theta"], result["eta"]["eta"]))
    path = write_report(args.out, "extend", "extend", config, result)
    qi = result["qi"]
    print(f"K={qi['K']:g} C={qi['C']:g} R={ext.R:g} agreement={result['boundary_agreement']['passed']} report={path}")
    return 0


def cmd_repro(args) -> int:
    if args.example not in EXAMPLES:
        raise SpaceError(f"unknown example id {args.example!r}; choose from {sorted(EXAMPLES)}")
    res = run_example(args.example)
    config = {"command": "repro", "example": args.example, "settings": res["config"]}
    path = write_report(args.out, args.example, "repro", config, res)
    write_csv(Path(args.out) / f"{args.example}_sweep.csv", ["trunc", "growth", "pairs"],
              [(r["trunc"], r["growth"], r["pairs"]) for r in res["two_stable_sweep"]])
    if args.example == "exampleA":
        write_csv(Path(args.out) / "exampleA_growth.csv", ["n", "contraction", "expected"],
                  [(r["n"], r["contraction"], r["expected"]) for r in res["growth_law"]])
    print(f"{args.example}: {res['summary']}")
    for k, v in res["verdicts"].items():
        print(f"  {k}: {v}")
    print(f"report={path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(CAYLEY + tuple(PLANES)))
    common.add_argument("--radius", type=int, default=5, help="Cayley ball radius")
    common.add_argument("--trunc", type=float, default=20.0, help="truncation radius of plane models")
    common.add_argument("--pitch", type=float, default=0.25, help="plane sample pitch")
    common.add_argument("--index-max", type=int, default=None, help="largest |m| of the rays r_m")
    common.add_argument("--grid", default=None, help="JSON list of [K, C] gauge cells")
    common.add_argument("--budget", type=int, default=500)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=None)
    common.add_argument("--out", default="morsekit-out")

    p = argparse.ArgumentParser(prog="morsekit", description="Coarse geometry of desk-scale spaces.")
    p.add_argument("--version", action="version", version=f"morsekit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="delta, gauge, contraction and stratum reports")
    a.add_argument("space", nargs="?", help="space description JSON")
    a.add_argument("--level", type=float, default=2.0, help="contraction level of the stratum gauge")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("extend", parents=[common], help="extend a boundary map to the interior")
    e.add_argument("space", nargs="?", help="source space description JSON")
    e.add_argument("--target", default=None, help="target space description JSON")
    e.add_argument("--map", default=None, help="boundary map JSON")
    e.add_argument("--map-kind", choices=sorted(list(MAPS) + ["scrambled"]), default="identity")
    e.add_argument("--N0", type=float, default=2.0)
    e.add_argument("--sweep", type=float, nargs="+", default=None, help="truncation radii for the QI sweep")
    e.set_defaults(func=cmd_extend)

    r = sub.add_parser("repro", parents=[common], help="reproduce a plane-with-rays counterexample")
    r.add_argument("example", help="exampleA or exampleB")
    r.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_jobs(args.jobs)
        return args.func(args)
    except ExtensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SpaceError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Boundary maps and fitted moduli for their regularity properties."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .boundary import BoundaryStratum, _label
from .centers import center_set, coarse_center
from .morse import ContractionReport, GaugeTable, contraction_constant
from .spaces import PlaneRaysSpace, Space, SpaceError, ray_sort_key

CONTRACTION_TOL = 1e-6
ALPHA_MAX = 4.0


class MapError(SpaceError):
    """Invalid boundary map."""


@dataclass
class BoundaryMap:
    """Bijection between marked rays of two spaces."""

    source: Space
    target: Space
    pairs: dict
    label: str = "f"

    def __post_init__(self):
        self.pairs = {_label(k): _label(v) for k, v in dict(self.pairs).items()}
        if len(set(self.pairs.values())) != len(self.pairs):
            raise MapError("map is not injective")
        for k, v in self.pairs.items():
            try:
                self.source.ray(k)
                self.target.ray(v)
            except KeyError as exc:
                raise MapError(str(exc)) from None

    def __call__(self, p) -> str:
        return self.pairs[_label(p)]

    @property
    def domain(self) -> list:
        return sorted(self.pairs, key=ray_sort_key)

    def inverse(self) -> "BoundaryMap":
        return BoundaryMap(self.target, self.source, {v: k for k, v in self.pairs.items()}, self.label + "^-1")

    def compose(self, other: "BoundaryMap") -> "BoundaryMap":
        """``other`` after ``self``."""
        return BoundaryMap(self.source, other.target, {k: other(v) for k, v in self.pairs.items()},
                           f"{other.label}.{self.label}")

    def to_dict(self) -> dict:
        return {"label": self.label, "pairs": [[k, self.pairs[k]] for k in self.domain]}


def load_map(source: Space, target: Space, desc, label: str = "f") -> BoundaryMap:
    if isinstance(desc, (str, Path)):
        try:
            desc = json.loads(Path(desc).read_text())
        except FileNotFoundError:
            raise MapError(f"map file {str(desc)!r} not found") from None
        except json.JSONDecodeError as exc:
            raise MapError(f"bad JSON in map file: {exc}") from None
    pairs = desc.get("pairs") if isinstance(desc, dict) else None
    if not isinstance(pairs, list):
        raise MapError("map description needs a 'pairs' list")
    keys = [p[0] for p in pairs]
    if len(set(keys)) != len(keys):
        raise MapError("map is not a function: repeated source ray")
    f = BoundaryMap(source, target, {a: b for a, b in pairs}, desc.get("label", label))
    missing = {r.label for r in source.rays} - set(f.pairs)
    extra = {r.label for r in target.rays} - set(f.pairs.values())
    if missing or extra:
        raise MapError("map is not a bijection between the marked rays")
    return f


# standard maps ---------------------------------------------------------------


def _index(label: str) -> int | None:
    key = ray_sort_key(label)
    return key[1] if key[0] == 0 else None


def identity_map(space: Space) -> BoundaryMap:
    return BoundaryMap(space, space, {r.label: r.label for r in space.rays}, "id")


def even_flip_map(space: Space) -> BoundaryMap:
    """r_{2n} -> r_{-2n}; every other ray is fixed."""
    pairs = {}
    for r in space.rays:
        m = _index(r.label)
        pairs[r.label] = f"r_{-m}" if m is not None and m % 2 == 0 else r.label
    return BoundaryMap(space, space, pairs, "even-flip")


def reflection_map(space: Space) -> BoundaryMap:
    """r_m -> r_{-m} and r' <-> r''."""
    pairs = {}
    for r in space.rays:
        m = _index(r.label)
        if m is not None:
            pairs[r.label] = f"r_{-m}"
        else:
            pairs[r.label] = {"r'": "r''", "r''": "r'"}.get(r.label, r.label)
    return BoundaryMap(space, space, pairs, "reflection")


def shift_map(space: Space, target: Space, k: int = 1) -> BoundaryMap:
    """r_m -> r_{m+k} on the integer rays; r' and r'' are kept."""
    pairs = {}
    for r in space.rays:
        m = _index(r.label)
        pairs[r.label] = f"r_{m + k}" if m is not None else r.label
    return BoundaryMap(space, target, pairs, f"shift{k:+d}")


def scrambled_map(space: Space, seed: int = 0) -> BoundaryMap:
    labels = [r.label for r in space.rays]
    perm = np.random.default_rng(seed).permutation(len(labels))
    return BoundaryMap(space, space, {labels[i]: labels[int(j)] for i, j in enumerate(perm)}, f"scrambled{seed}")


# contraction helpers -----------------------------------------------------------


def pair_contraction(space: Space, p, q, stop_above: float | None = None) -> float:
    return contraction_constant(space, space.ray_geodesic(_label(p), _label(q)), stop_above=stop_above).constant


def ray_contraction(space: Space, x: int, p) -> float:
    return contraction_constant(space, space.geodesic_to_ray(int(x), _label(p))).constant


def _level(gauge) -> float:
    if gauge is None:
        return math.inf
    if isinstance(gauge, GaugeTable):
        if gauge.contraction is None:
            raise ValueError("gauge table does not carry a contraction level")
        return gauge.contraction
    return float(gauge)


def qualifying_triples(space: Space, N0, labels=None) -> list[tuple[str, str, str]]:
    """Triples whose three sides are N0-contracting."""
    level = _level(N0)
    labels = sorted(labels or [r.label for r in space.rays], key=ray_sort_key)
    ok = {}
    for p, q in itertools.combinations(labels, 2):
        c = pair_contraction(space, p, q, stop_above=level + CONTRACTION_TOL)
        ok[(p, q)] = ok[(q, p)] = c <= level + CONTRACTION_TOL
    return [t for t in itertools.combinations(labels, 3)
            if ok[(t[0], t[1])] and ok[(t[1], t[2])] and ok[(t[0], t[2])]]


# reports -----------------------------------------------------------------------


@dataclass
class ModulusReport:
    kind: str
    constants: dict
    worst_witness: object = None
    sample_count: int = 0
    flags: dict = field(default_factory=dict)
    table: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "constants": self.constants, "worst_witness": self.worst_witness,
                "sample_count": self.sample_count, "flags": self.flags, "table": self.table}


def default_pairs(labels, near: int = 2, extra: int = 50, seed: int = 0) -> list[tuple[str, str]]:
    """Pairs of rays close in the ray order plus a seeded sample of the rest."""
    labels = list(labels)
    close, far = [], []
    for i, j in itertools.combinations(range(len(labels)), 2):
        (close if j - i <= near else far).append((labels[i], labels[j]))
    if len(far) > extra:
        pick = np.random.default_rng(seed).choice(len(far), size=extra, replace=False)
        far = [far[k] for k in sorted(pick)]
    return close + far


def _order_by_base(space: Space, labels) -> list:
    if isinstance(space, PlaneRaysSpace):
        return sorted(labels, key=lambda l: (space.bases[l], ray_sort_key(l)))
    return sorted(labels, key=ray_sort_key)


def check_two_stable(f: BoundaryMap, gauge_in=None, pairs=None) -> ModulusReport:
    """Growth of contraction from source pairs to their image pairs.

    Pairs qualify when their source contraction is within ``gauge_in`` (a
    contraction level or a table built from one; ``None`` admits every pair).
    """
    level = _level(gauge_in)
    if pairs is None:
        pairs = default_pairs(_order_by_base(f.source, f.domain))
    rows, growth, worst = [], 0.0, None
    for p, q in pairs:
        stop = None if math.isinf(level) else level + CONTRACTION_TOL
        cs = pair_contraction(f.source, p, q, stop_above=stop)
        if cs > level + CONTRACTION_TOL:
            continue
        ct = pair_contraction(f.target, f(p), f(q))
        ratio = ct / cs if cs > 0 else (1.0 if ct == 0 else math.inf)
        rows.append({"pair": [p, q], "image": [f(p), f(q)], "source": cs, "image_contraction": ct, "ratio": ratio})
        if ratio > growth:
            growth, worst = ratio, [p, q]
    consts = {"growth": growth,
              "max_source": max((r["source"] for r in rows), default=0.0),
              "max_image": max((r["image_contraction"] for r in rows), default=0.0)}
    return ModulusReport("two_stable", consts, worst, len(rows), {"empty": not rows}, rows)


def unbounded_growth(values, factor: float = 1.5, doublings: int = 2) -> bool:
    """Growth by at least ``factor`` at each of the last ``doublings`` truncation doublings."""
    values = list(values)
    if len(values) < doublings + 1:
        return False
    tail = values[-(doublings + 1):]
    return all(b >= factor * a for a, b in zip(tail[:-1], tail[1:]))


def spread_sample(space: Space, pts, size: int = 9, start: int | None = None) -> list[int]:
    """Greedy farthest-point sample of ``pts``; starts at ``start`` if given."""
    pts = np.asarray(pts, dtype=np.int64)
    if len(pts) <= size:
        return [int(p) for p in pts]
    first = int(start) if start is not None else int(pts[0])
    chosen = [first]
    d = space.dist_block([first], pts)[0]
    while len(chosen) < size:
        k = int(np.argmax(d))
        if d[k] <= 0:
            break
        chosen.append(int(pts[k]))
        d = np.minimum(d, space.dist_block([pts[k]], pts)[0])
    return chosen


def check_basetriangle_stable(f: BoundaryMap, N0_bound, N_bound=(0.0, 1.0, 2.0, 4.0),
                              center_samples: int = 9, pairing: str = "all",
                              triples=None) -> ModulusReport:
    """Image stratum levels for strata anchored at coarse centers.

    For each source level C, the stratum at x0 holds the rays p whose geodesic
    [x0, p) is C-contracting; N'(C) is the largest contraction of [y0, f(p))
    over qualifying triples, sampled centers x0 of the triple and y0 of its
    image (all combinations, or matched positions with ``pairing="same"``).
    """
    levels = [float(c) for c in (N_bound.upper if isinstance(N_bound, GaugeTable) else N_bound)]
    if triples is None:
        triples = qualifying_triples(f.source, N0_bound, f.domain)
    if not triples:
        return ModulusReport("basetriangle_stable", {}, None, 0, {"empty": True})
    src_rays = f.domain
    best = {C: (0.0, None) for C in levels}
    src_level = {C: 0.0 for C in levels}
    for t in triples:
        img = tuple(f(v) for v in t)
        xc, Kx = coarse_center(f.source, *t)
        yc, Ky = coarse_center(f.target, *img)
        X0 = spread_sample(f.source, center_set(f.source, *t, k=Kx).points, center_samples, xc)
        Y0 = spread_sample(f.target, center_set(f.target, *img, k=Ky).points, center_samples, yc)
        cx = {x: {p: ray_contraction(f.source, x, p) for p in src_rays} for x in X0}
        cy = {y: {p: ray_contraction(f.target, y, f(p)) for p in src_rays} for y in Y0}
        combos = zip(X0, Y0) if pairing == "same" else itertools.product(X0, Y0)
        for x, y in combos:
            for C in levels:
                members = [p for p in src_rays if cx[x][p] <= C + CONTRACTION_TOL]
                if not members:
                    continue
                src_level[C] = max(src_level[C], max(cx[x][p] for p in members))
                val, arg = max((cy[y][p], p) for p in members)
                if val > best[C][0] + 1e-12:
                    best[C] = (val, {"triple": list(t), "x0": x, "y0": y, "ray": arg})
    table = [{"C": C, "source_level": src_level[C], "N_prime": best[C][0], "witness": best[C][1]}
             for C in levels]
    consts = {"N0": _level(N0_bound), "max_excess": max(r["N_prime"] - r["C"] for r in table)}
    worst = max(table, key=lambda r: r["N_prime"] - r["C"])["witness"]
    return ModulusReport("basetriangle_stable", consts, worst, len(triples),
                         {"empty": False, "triples": [list(t) for t in triples]}, table)


# metric moduli -------------------------------------------------------------------


def _member_pairs(f: BoundaryMap, S: BoundaryStratum, T: BoundaryStratum):
    members = [m for m in S.members if m in f.pairs]
    for m in members:
        if f(m) not in T:
            raise MapError(f"{m} maps outside the target stratum")
    return members


def fit_biholder(f: BoundaryMap, S: BoundaryStratum, T: BoundaryStratum, alpha1: float = 1.0) -> ModulusReport:
    """Smallest C with C^-1 dX^(1/a1) <= dY^a2 <= C dX^a1 over member pairs.

    In logarithms the constraints are linear in (log C, a2) for fixed a1, so
    the fit is a linear program; among optimal solutions a2 closest to 1 wins.
    """
    members = _member_pairs(f, S, T)
    xs, ys, prs = [], [], []
    for p, q in itertools.combinations(members, 2):
        dx, dy = S.d(p, q), T.d(f(p), f(q))
        if dy <= 0 or dx <= 0:
            return ModulusReport("biholder", {}, [p, q], 0, {"infeasible": True})
        xs.append(math.log(dx))
        ys.append(math.log(dy))
        prs.append([p, q])
    if not xs:
        return ModulusReport("biholder", {"C": 1.0, "alpha1": alpha1, "alpha2": 1.0}, None, 0, {"empty": True})
    x, y = np.array(xs), np.array(ys)
    # variables (c, a2): -c - a2 y <= -x / a1 ;  -c + a2 y <= a1 x
    A = np.concatenate([np.stack([-np.ones_like(y), -y], 1), np.stack([-np.ones_like(y), y], 1)])
    b = np.concatenate([-x / alpha1, alpha1 * x])
    bounds = [(0, None), (1e-9, None)]
    res = linprog([1.0, 0.0], A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        return ModulusReport("biholder", {}, None, len(xs), {"infeasible": True})
    c = float(res.x[0])
    # tie-break: a2 closest to 1 among optimal solutions, via |a2 - 1| <= u
    A2 = np.concatenate([np.hstack([A, np.zeros((len(A), 1))]),
                         [[1.0, 0.0, 0.0]], [[0.0, 1.0, -1.0]], [[0.0, -1.0, -1.0]]])
    b2 = np.concatenate([b, [c + 1e-9], [1.0], [-1.0]])
    res2 = linprog([0.0, 0.0, 1.0], A_ub=A2, b_ub=b2, bounds=bounds + [(0, None)], method="highs")
    c, a2 = (float(res2.x[0]), float(res2.x[1])) if res2.success else (c, float(res.x[1]))
    slack = np.minimum(a2 * y - (-c + x / alpha1), c + alpha1 * x - a2 * y)
    k = int(np.argmin(slack))
    return ModulusReport("biholder", {"C": math.exp(c), "alpha1": alpha1, "alpha2": a2}, prs[k], len(xs))


def qs_samples(f: BoundaryMap, S: BoundaryStratum, T: BoundaryStratum):
    members = _member_pairs(f, S, T)
    if len(members) < 3:
        raise MapError("quasisymmetry needs at least three points")
    ts, ss, wit = [], [], []
    for a, b, c in itertools.permutations(members, 3):
        dab, dac = S.d(a, b), S.d(a, c)
        fab, fac = T.d(f(a), f(b)), T.d(f(a), f(c))
        if dac <= 0 or fac <= 0:
            raise MapError("coincident points in a quasisymmetry sample")
        ts.append(dab / dac)
        ss.append(fab / fac)
        wit.append([a, b, c])
    return np.array(ts), np.array(ss), wit


def _qs_lambda(t: np.ndarray, s: np.ndarray, alpha: float) -> tuple[float, int]:
    e = np.where(t < 1, 1.0 / alpha, alpha)
    with np.errstate(divide="ignore"):
        ratio = np.where(s > 0, s / np.power(t, e), 0.0)
    k = int(np.argmax(ratio))
    return max(1.0, float(ratio[k])), k


def fit_quasisymmetry(f: BoundaryMap, S: BoundaryStratum, T: BoundaryStratum,
                      alpha_max: float = ALPHA_MAX, tol: float = 1e-9) -> ModulusReport:
    """Power modulus psi(t) = lam t^(1/alpha) (t < 1), lam t^alpha (t >= 1) dominating all samples.

    lam(alpha) never increases with alpha, so the smallest attainable lam is
    lam(alpha_max); the reported alpha is the smallest one reaching it. lam is
    floored at 1.
    """
    t, s, wit = qs_samples(f, S, T)
    target, _ = _qs_lambda(t, s, alpha_max)
    lo, hi = 1.0, alpha_max
    if _qs_lambda(t, s, lo)[0] <= target * (1 + tol):
        hi = lo
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _qs_lambda(t, s, mid)[0] <= target * (1 + tol):
                hi = mid
            else:
                lo = mid
    lam, k = _qs_lambda(t, s, hi)
    capped = hi >= alpha_max - 1e-6 and _qs_lambda(t, s, alpha_max - 1e-3)[0] > target * (1 + tol)
    return ModulusReport("power_qs", {"alpha": hi, "lambda": lam}, wit[k], len(t), {"capped": bool(capped)})


def default_ratio_grid(S: BoundaryStratum, size: int = 12) -> list[float]:
    vals = S.metric.values[np.triu_indices(len(S.members), 1)]
    vals = vals[vals > 0]
    if len(vals) == 0:
        return [1.0]
    ratios = np.unique(np.round((vals[:, None] / vals[None, :]).ravel(), 12))
    ratios = ratios[ratios >= 1]
    if len(ratios) > size:
        ratios = np.quantile(ratios, np.linspace(0, 1, size))
    return sorted(set(float(r) for r in ratios) | {1.0})


def fit_quasiconformal(f: BoundaryMap, S: BoundaryStratum, T: BoundaryStratum, annulus_grid=None) -> ModulusReport:
    """phi(r) = worst spread of the image of an r-annulus around f(center).

    ``annulus_grid`` is a list of r values; inner radii a range over the
    distances realised from each center.
    """
    from .boundary import annulus

    members = _member_pairs(f, S, T)
    rs = default_ratio_grid(S) if annulus_grid is None else sorted(float(r) for r in annulus_grid)
    phi = {r: 0.0 for r in rs}
    wit = {r: None for r in rs}
    skipped = 0
    count = 0
    for x in members:
        row = S.metric.values[S.index(x)]
        radii = sorted(set(float(v) for v, m in zip(row, S.members) if m != x and v > 0 and m in f.pairs))
        for r in rs:
            for a in radii:
                A = [q for q in annulus(S, x, a, r) if q in f.pairs]
                if not A:
                    skipped += 1
                    continue
                count += 1
                D = [T.d(f(x), f(q)) for q in A]
                if min(D) <= 0:
                    raise MapError("image annulus collapses onto its center")
                spread = max(D) / min(D)
                if spread > phi[r] + 1e-12:
                    phi[r], wit[r] = spread, {"center": x, "a": a, "r": r}
    table = [{"r": r, "phi": phi[r]} for r in rs]
    worst = max(rs, key=lambda r: phi[r] / r)
    return ModulusReport("strongly_qc", {"phi": {f"{r:.12g}": phi[r] for r in rs}}, wit[worst], count,
                         {"skipped_empty": skipped}, table)

"""Quasi-geodesics, Morse gauge estimates, contraction and Morse strata."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spaces import Geodesic, GraphSpace, PlaneRaysSpace, Space

DEFAULT_GRID: tuple[tuple[float, float], ...] = tuple(
    (K, C) for K in (1.0, 1.5, 2.0, 3.0) for C in (0.0, 1.0, 2.0, 4.0))
DEFAULT_BUDGET = 2000
MAX_PATH_POINTS = 600
# N(K,C) = a * contraction * K^2 + b * K * C + c0
CONVERSION = (2.0, 1.0, 1.0)


def arc_params(space: Space, path) -> np.ndarray:
    path = np.asarray(path, dtype=np.int64)
    if len(path) < 2:
        return np.zeros(len(path))
    gaps = np.array([space.dist(int(a), int(b)) for a, b in zip(path[:-1], path[1:])])
    return np.concatenate([[0.0], np.cumsum(gaps)])


def _qg_excess(space: Space, path: np.ndarray, params: np.ndarray, K: float) -> tuple[np.ndarray, np.ndarray]:
    d = space.dist_block(path, path)
    s = np.abs(params[:, None] - params[None, :])
    return s / K - d, d - K * s


@dataclass(frozen=True)
class QGResult:
    ok: bool
    worst: tuple[int, int]
    excess: float

    def __iter__(self):
        return iter((self.ok, self.worst))


def is_quasi_geodesic(space: Space, path, K: float, C: float, tol: float = 1e-9) -> QGResult:
    """Check K^-1|s-t| - C <= d(path(s), path(t)) <= K|s-t| + C on all index pairs.

    ``worst`` is the violating pair with the largest excess, or the tightest
    pair when the check passes.
    """
    if K < 1 or C < 0:
        raise ValueError("need K >= 1 and C >= 0")
    path = np.asarray(path, dtype=np.int64)
    if len(path) == 0:
        raise ValueError("empty path")
    if len(path) == 1:
        return QGResult(True, (0, 0), -C)
    params = arc_params(space, path)
    low, high = _qg_excess(space, path, params, K)
    excess = np.maximum(low, high) - C
    iu = np.triu_indices(len(path), 1)
    t = int(np.argmax(excess[iu]))
    worst = (int(iu[0][t]), int(iu[1][t]))
    val = float(excess[iu][t])
    return QGResult(val <= tol, worst, val)


def required_C(space: Space, path, Ks) -> np.ndarray:
    """Smallest C making ``path`` a (K, C)-quasi-geodesic, for each K."""
    path = np.asarray(path, dtype=np.int64)
    params = arc_params(space, path)
    d = space.dist_block(path, path)
    s = np.abs(params[:, None] - params[None, :])
    # arc length dominates distance, so only the lower inequality can bind
    return np.array([max(0.0, float(np.max(s / K - d)), float(np.max(d - K * s))) for K in Ks])


# ---------------------------------------------------------------------------


@dataclass
class GaugeTable:
    """Morse gauge estimate on a finite (K, C) grid."""

    grid: list
    lower: np.ndarray
    upper: np.ndarray | None = None
    certified: str = "none"
    witnesses: list = field(default_factory=list)
    no_witness: bool = False
    label: str = ""
    contraction: float | None = None

    def __post_init__(self):
        self.grid = [(float(K), float(C)) for K, C in self.grid]
        self.lower = np.asarray(self.lower, dtype=float)
        if self.upper is not None:
            self.upper = np.asarray(self.upper, dtype=float)
        if len(self.lower) != len(self.grid):
            raise ValueError("lower must align with grid")

    @classmethod
    def constant(cls, value: float, grid=DEFAULT_GRID, label: str = "") -> "GaugeTable":
        """Assumed upper gauge with the same value on every cell."""
        n = len(grid)
        return cls(list(grid), np.zeros(n), np.full(n, float(value)), "assumed", label=label or f"const{value:g}")

    @classmethod
    def from_contraction(cls, contraction: float, grid=DEFAULT_GRID, conversion=CONVERSION,
                         lower=None, label: str = "") -> "GaugeTable":
        a, b, c0 = conversion
        upper = np.array([a * contraction * K * K + b * K * C + c0 for K, C in grid])
        low = np.zeros(len(grid)) if lower is None else np.asarray(lower, dtype=float)
        return cls(list(grid), low, upper, "modulo-conversion", label=label or f"contr{contraction:g}",
                   contraction=float(contraction))

    def bound(self) -> np.ndarray:
        return self.upper if self.upper is not None else self.lower

    def value(self, K: float, C: float, which: str = "bound") -> float:
        k = self.grid.index((float(K), float(C)))
        arr = self.bound() if which == "bound" else getattr(self, which)
        return float(arr[k])

    def n30(self) -> float:
        """Gauge value at (K, C) = (3, 0)."""
        return self.value(3.0, 0.0)

    def within(self, other: "GaugeTable", tol: float = 1e-9) -> bool:
        """True when this table's lower bounds do not exceed ``other`` anywhere.

        Cells missing from ``other`` impose no constraint.
        """
        bound = other.bound()
        idx = {g: i for i, g in enumerate(other.grid)}
        return all(self.lower[k] <= bound[idx[g]] + tol for k, g in enumerate(self.grid) if g in idx)

    def to_dict(self) -> dict:
        out = {"label": self.label, "certified": self.certified, "no_witness": self.no_witness,
               "contraction": self.contraction,
               "cells": [{"K": K, "C": C, "lower": float(self.lower[i]),
                          "upper": None if self.upper is None else float(self.upper[i])}
                         for i, (K, C) in enumerate(self.grid)]}
        return out


def _parse_grid(grid) -> list:
    if grid is None:
        return list(DEFAULT_GRID)
    grid = [(float(K), float(C)) for K, C in grid]
    for K, C in grid:
        if K < 1 or C < 0:
            raise ValueError(f"bad grid cell ({K}, {C})")
    return grid


def _random_geodesic(space: GraphSpace, a: int, b: int, rng: np.random.Generator) -> list[int]:
    path, u = [a], a
    while u != b:
        nxt = space._tight_next(u, b)
        u = nxt[int(rng.integers(0, len(nxt)))]
        path.append(u)
    return path


def _join(space: Space, waypoints: list[int], rng: np.random.Generator | None = None) -> np.ndarray:
    seq: list[int] = [int(waypoints[0])]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        if rng is not None and isinstance(space, GraphSpace):
            seq.extend(_random_geodesic(space, int(a), int(b), rng)[1:])
        else:
            seq.extend(int(p) for p in space.geodesic(int(a), int(b)).points[1:])
    return np.asarray(seq, dtype=np.int64)


def _candidate_paths(space: Space, g: Geodesic, rng: np.random.Generator, budget: int,
                     Kmax: float, Cmax: float):
    """Yield candidate paths with endpoints on ``g``.

    The stream only depends on the rng state, so a smaller budget always
    yields a prefix of a larger one.
    """
    pts = g.points
    L = len(pts)
    if L == 1:
        yield np.asarray(pts)
        return
    yield np.asarray(pts)
    if isinstance(space, GraphSpace):
        alts, _ = space.geodesics_all(int(pts[0]), int(pts[-1]), budget=16)
        for alt in alts:
            yield alt.points
    cache: dict[tuple[int, int], np.ndarray] = {}
    for _ in range(budget):
        i, j = sorted(rng.choice(L, size=2, replace=False).tolist())
        a, b = int(pts[i]), int(pts[j])
        key = (a, b)
        if key not in cache:
            da, db = space.dist_from(a), space.dist_from(b)
            ok = np.nonzero(da + db <= Kmax * (space.dist(a, b) + Cmax) + 1e-9)[0]
            cache[key] = ok
        ok = cache[key]
        mode = rng.integers(0, 3)
        if mode == 0 or len(ok) < 2:
            z = int(ok[rng.integers(0, len(ok))])
            yield _join(space, [a, z, b], rng)
        elif mode == 1:
            z1, z2 = (int(ok[t]) for t in rng.integers(0, len(ok), size=2))
            yield _join(space, [a, z1, z2, b], rng)
        else:
            if isinstance(space, GraphSpace):
                steps = int(rng.integers(1, 2 + int(Cmax) + 2))
                walk, u = [a], a
                for _ in range(steps):
                    nbrs = list(space.adj[u])
                    u = nbrs[int(rng.integers(0, len(nbrs)))]
                    walk.append(u)
                tail = _random_geodesic(space, u, b, rng)[1:]
                yield np.asarray(walk + [int(t) for t in tail], dtype=np.int64)
            else:
                z = int(ok[rng.integers(0, len(ok))])
                m = int(pts[rng.integers(i, j + 1)])
                yield _join(space, [a, z, m, b]) if m not in (a, b) else _join(space, [a, z, b])


def morse_gauge_lower(space: Space, g: Geodesic, grid=None, budget: int = DEFAULT_BUDGET,
                      seed: int = 0, max_points: int = MAX_PATH_POINTS) -> GaugeTable:
    """Witnessed lower bound for the Morse gauge of ``g``.

    One candidate pool is drawn for the whole grid: each candidate records the
    smallest C for which it is a (K, C)-quasi-geodesic at every grid K, and its
    deviation from ``g`` then counts in every cell it qualifies for.
    """
    grid = _parse_grid(grid)
    Ks = sorted({K for K, _ in grid})
    Kmax = max(Ks)
    Cmax = max(C for _, C in grid)
    lower = np.zeros(len(grid))
    witnesses: list = [None] * len(grid)
    gpts = np.asarray(g.points, dtype=np.int64)
    rng = np.random.default_rng(seed)
    seen: set = set()
    found = False
    for path in _candidate_paths(space, g, rng, budget, Kmax, Cmax):
        if len(path) > max_points:
            continue
        key = hash(path.tobytes())
        if key in seen:
            continue
        seen.add(key)
        need = dict(zip(Ks, required_C(space, path, Ks)))
        dev = float(space.dist_block(path, gpts).min(axis=1).max()) if len(path) else 0.0
        for k, (K, C) in enumerate(grid):
            if need[K] <= C + 1e-9:
                found = True
                if dev > lower[k] + 1e-12:
                    lower[k] = dev
                    witnesses[k] = [int(p) for p in path]
    return GaugeTable(grid, lower, witnesses=witnesses, no_witness=not found)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionReport:
    constant: float
    tested_balls: int
    witness: tuple[int, float] | None
    empty: bool = False

    def to_dict(self) -> dict:
        return {"constant": self.constant, "tested_balls": self.tested_balls,
                "witness": None if self.witness is None else
                {"center": self.witness[0], "radius": self.witness[1]}, "empty": self.empty}


def projection_intervals(space: Space, g: Geodesic, rows=None, chunk: int = 4096, tol: float = 1e-9):
    """Per point: distance to g and parameter range of its nearest points on g."""
    rows = np.arange(space.n) if rows is None else np.asarray(rows, dtype=np.int64)
    gpts = np.asarray(g.points, dtype=np.int64)
    params = np.asarray(g.params, dtype=float)
    groups = [(np.arange(len(rows)), gpts, params)]
    if isinstance(space, PlaneRaysSpace):
        # off g's rays, the height term makes plane samples of g the only candidates
        plane = space.rid[gpts] < 0
        if plane.any():
            g_rays = np.unique(space.rid[gpts[~plane]])
            on_rays = np.isin(space.rid[rows], g_rays) & (space.rid[rows] >= 0)
            groups = [(np.nonzero(~on_rays)[0], gpts[plane], params[plane]),
                      (np.nonzero(on_rays)[0], gpts, params)]
    dmin = np.empty(len(rows))
    pmin = np.empty(len(rows))
    pmax = np.empty(len(rows))
    for idx, gp, par_g in groups:
        for s in range(0, len(idx), chunk):
            sel = idx[s:s + chunk]
            d = space.dist_block(rows[sel], gp)
            m = d.min(axis=1)
            near = d <= m[:, None] + tol
            par = np.broadcast_to(par_g, d.shape)
            dmin[sel] = m
            pmin[sel] = np.where(near, par, np.inf).min(axis=1)
            pmax[sel] = np.where(near, par, -np.inf).max(axis=1)
    return dmin, pmin, pmax


def default_ball_centers(space: Space) -> np.ndarray:
    if isinstance(space, PlaneRaysSpace):
        step = max(1.0, round(space.truncation_radius / 20.0))
        grid = lambda v: np.abs(np.round(v / step) * step - v) < 1e-9  # noqa: E731
        plane = np.nonzero((space.rid < 0) & grid(space.px) & grid(space.py))[0]
        heights = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
        rays = np.nonzero((space.rid >= 0) & np.isin(space.h, heights))[0]
        return np.concatenate([plane, rays])
    return np.arange(space.n)


CENTER_CACHE_LIMIT = 50_000_000


def _center_rows(space: Space, centers: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Distances from ``centers[rows]`` to every point, cached for plane models."""
    if isinstance(space, GraphSpace):
        return space.table[centers[rows]]
    if len(centers) * space.n <= CENTER_CACHE_LIMIT:
        cache = space.__dict__.setdefault("_center_dist_cache", {})
        key = centers.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = space.dist_block(centers, np.arange(space.n))
        return cache[key][rows]
    return space.dist_block(centers[rows], np.arange(space.n))


def contraction_constant(space: Space, g: Geodesic, ball_grid=None, chunk: int = 256,
                         tol: float = 1e-9, stop_above: float | None = None) -> ContractionReport:
    """Largest projection diameter of a ball disjoint from ``g``.

    Projection diameter grows with the radius, so for each center only the
    largest disjoint ball (the open ball of radius d(c, g)) is evaluated.
    With ``stop_above`` the scan ends as soon as the running maximum exceeds
    it; the result is then only a lower bound and is not cached.
    """
    cache = space.__dict__.setdefault("_contraction_cache", {})
    centers = default_ball_centers(space) if ball_grid is None else np.asarray(ball_grid, dtype=np.int64)
    key = (g.points.tobytes(), centers.tobytes())
    if key in cache:
        return cache[key]
    dc_all = projection_intervals(space, g, rows=centers)[0]
    order = np.nonzero(dc_all > tol)[0]
    # big balls first: they carry the large projections, which helps stop_above
    order = order[np.argsort(-dc_all[order], kind="stable")]
    if stop_above is not None and len(order):
        # cheap probe: a few big balls, projecting only their own members
        rows = order[:16]
        inside = _center_rows(space, centers, rows) < dc_all[rows, None] - tol
        members = np.nonzero(inside.any(axis=0))[0]
        if len(members):
            _, lo, hi = projection_intervals(space, g, rows=members)
            sub = inside[:, members]
            diam = (np.where(sub, hi[None, :], -np.inf).max(axis=1)
                    - np.where(sub, lo[None, :], np.inf).min(axis=1))
            diam = np.where(np.isfinite(diam), diam, 0.0)
            k = int(np.argmax(diam))
            if diam[k] > stop_above:
                return ContractionReport(float(diam[k]), int(len(order)),
                                         (int(centers[rows[k]]), float(dc_all[rows[k]])))
    _, pmin, pmax = projection_intervals(space, g)
    best, wit = 0.0, None
    stopped = False
    for s in range(0, len(order), chunk):
        rows = order[s:s + chunk]
        d = _center_rows(space, centers, rows)
        dc = dc_all[rows]
        inside = d < dc[:, None] - tol
        hi = np.where(inside, pmax[None, :], -np.inf).max(axis=1)
        lo = np.where(inside, pmin[None, :], np.inf).min(axis=1)
        diam = np.where(np.isfinite(hi) & np.isfinite(lo), hi - lo, 0.0)
        k = int(np.argmax(diam))
        if diam[k] > best + 1e-12:
            best, wit = float(diam[k]), (int(centers[rows[k]]), float(dc[k]))
        if stop_above is not None and best > stop_above:
            stopped = True
            break
    rep = ContractionReport(best, int(len(order)), wit, empty=len(order) == 0)
    if not stopped:
        cache[key] = rep
    return rep


# ---------------------------------------------------------------------------


def _end_set(g: Geodesic) -> set:
    return {e for e in g.ends}


def slim_constant(space: Space, sides) -> float:
    """Largest distance from a point of one side to the union of the other two."""
    sides = list(sides)
    if len(sides) != 3:
        raise ValueError("a triangle has three sides")
    ends = [_end_set(s) for s in sides]
    for i in range(3):
        for j in range(i + 1, 3):
            if not ends[i] & ends[j]:
                raise ValueError("sides do not share endpoints")
    worst = 0.0
    for i in range(3):
        others = np.concatenate([sides[j].points for j in range(3) if j != i])
        worst = max(worst, float(space.dist_to_set(others, rows=sides[i].points).max()))
    return worst


# ---------------------------------------------------------------------------


@dataclass
class StratumResult:
    basepoint: int
    members: list
    inconclusive: list
    refuted: list

    def __contains__(self, x) -> bool:
        return x in set(self.members)


def geodesic_not_refuted(space: Space, g: Geodesic, gauge_bound: GaugeTable, budget: int, seed: int) -> bool:
    low = morse_gauge_lower(space, g, gauge_bound.grid, budget=budget, seed=seed)
    return low.within(gauge_bound)


def stratify(space: Space, basepoint: int, gauge_bound: GaugeTable, points=None,
             rep_budget: int = 8, search_budget: int = 200, seed: int = 0) -> StratumResult:
    """Points all of whose geodesics to ``basepoint`` are not refuted at ``gauge_bound``.

    A geodesic is refuted when some witnessed lower bound exceeds the bound.
    Points whose geodesic enumeration hits the budget are inconclusive and
    excluded.
    """
    pts = range(space.n) if points is None else points
    members, inconclusive, refuted = [], [], []
    for x in pts:
        x = int(x)
        gs, exhaustive = space.geodesics_all(x, basepoint, rep_budget)
        if not exhaustive:
            inconclusive.append(x)
            continue
        if all(geodesic_not_refuted(space, g, gauge_bound, search_budget, seed) for g in gs):
            members.append(x)
        else:
            refuted.append(x)
    return StratumResult(int(basepoint), members, inconclusive, refuted)

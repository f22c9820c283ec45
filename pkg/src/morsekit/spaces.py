"""Finite models of proper geodesic spaces.

Three families are supported:

* explicit weighted graphs with marked rays,
* balls in Cayley graphs (free group F2, Z^2 and the free product Z^2 * Z),
* the Euclidean plane with vertical rays glued along the x-axis ("plane with
  rays", presets ``A`` and ``B``).

Graph-like spaces materialise their full distance table. The plane models use
closed-form distances and only ever evaluate blocks of the table, so they can
hold far more sample points than a dense table would allow.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

TOL = 1e-9
DEFAULT_TRUNCATION = 40.0
DEFAULT_PITCH = 0.25
DEFAULT_EPSILON = 0.25
DENSE_CAP = 5000


class SpaceError(ValueError):
    """Invalid space description or failed construction."""


class ConstructionError(SpaceError):
    pass


@dataclass(frozen=True)
class Ray:
    """A marked geodesic ray, sampled from its base outwards."""

    label: str
    points: tuple[int, ...]

    @property
    def base(self) -> int:
        return self.points[0]

    @property
    def top(self) -> int:
        return self.points[-1]


@dataclass(frozen=True)
class Geodesic:
    """Point sequence with arc-length parameters.

    ``ends`` holds the endpoint descriptors: point indices for segments, ray
    labels for (truncated) rays and bi-infinite geodesics.
    """

    points: np.ndarray
    params: np.ndarray
    ends: tuple[Any, Any]

    @property
    def length(self) -> float:
        return float(self.params[-1]) if len(self.params) else 0.0

    def __len__(self) -> int:
        return len(self.points)

    def reversed(self) -> "Geodesic":
        return Geodesic(self.points[::-1].copy(), self.length - self.params[::-1],
                        (self.ends[1], self.ends[0]))

    def to_dict(self) -> dict:
        return {"points": [int(p) for p in self.points],
                "params": [float(s) for s in self.params],
                "ends": [e if isinstance(e, str) else int(e) for e in self.ends]}


def _chain(points: Sequence[int], gaps: Sequence[float], ends) -> Geodesic:
    params = np.concatenate([[0.0], np.cumsum(np.asarray(gaps, dtype=float))])
    return Geodesic(np.asarray(points, dtype=np.int64), params, ends)


class Space:
    """Common interface of all space models.

    Subclasses provide ``dist_block`` and the geodesic oracles. Instances are
    treated as immutable once built.
    """

    kind: str = "abstract"

    def __init__(self, labels: list, rays: list[Ray], truncation_radius: float,
                 description: dict | None = None):
        self.labels = labels
        self.rays = rays
        self.truncation_radius = float(truncation_radius)
        self.description = description or {}
        self._ray_index = {r.label: r for r in rays}
        self._label_index = {lab: i for i, lab in enumerate(labels)}

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.n

    def ray(self, label: str) -> Ray:
        try:
            return self._ray_index[label]
        except KeyError:
            raise KeyError(f"no ray labelled {label!r}") from None

    def index_of(self, label) -> int:
        return self._label_index[label]

    # distance oracle -----------------------------------------------------
    def dist_block(self, rows, cols) -> np.ndarray:
        raise NotImplementedError

    def dist(self, i: int, j: int) -> float:
        return float(self.dist_block([i], [j])[0, 0])

    def dist_from(self, i: int) -> np.ndarray:
        return self.dist_block([i], np.arange(self.n))[0]

    @property
    def table(self) -> np.ndarray:
        raise NotImplementedError

    def dist_to_set(self, points: Iterable[int], rows=None, chunk: int = 4096) -> np.ndarray:
        """Distance from every row point (default: all points) to a point set."""
        cols = np.asarray(list(points), dtype=np.int64)
        rows = np.arange(self.n) if rows is None else np.asarray(rows, dtype=np.int64)
        out = np.empty(len(rows))
        for s in range(0, len(rows), chunk):
            out[s:s + chunk] = self.dist_block(rows[s:s + chunk], cols).min(axis=1)
        return out

    # geodesic oracles ----------------------------------------------------
    def geodesic(self, a: int, b: int) -> Geodesic:
        raise NotImplementedError

    def geodesics_all(self, a: int, b: int, budget: int = 64) -> tuple[list[Geodesic], bool]:
        raise NotImplementedError

    def ray_geodesic(self, p: str, q: str) -> Geodesic:
        """Truncated bi-infinite geodesic joining the rays ``p`` and ``q``."""
        g = self.geodesic(self.ray(p).top, self.ray(q).top)
        return Geodesic(g.points, g.params, (p, q))

    def ray_geodesics_all(self, p: str, q: str, budget: int = 8) -> tuple[list[Geodesic], bool]:
        gs, exhaustive = self.geodesics_all(self.ray(p).top, self.ray(q).top, budget)
        return [Geodesic(g.points, g.params, (p, q)) for g in gs], exhaustive

    def geodesic_to_ray(self, x: int, p: str) -> Geodesic:
        g = self.geodesic(x, self.ray(p).top)
        return Geodesic(g.points, g.params, (int(x), p))

    def point_geodesic_is_valid(self, g: Geodesic, tol: float = 1e-6) -> bool:
        d = self.dist_block(g.points, g.points)
        gap = np.abs(g.params[:, None] - g.params[None, :])
        return bool(np.all(np.abs(d - gap) <= tol))

    # validation ----------------------------------------------------------
    def check_metric(self, sample: int = 200_000, seed: int = 0, tol: float = TOL) -> None:
        """Check the metric axioms; exhaustive up to 300 points, sampled beyond."""
        n = self.n
        if n <= 300:
            d = self.dist_block(np.arange(n), np.arange(n))
            if np.any(np.abs(np.diag(d)) > tol) or np.any(np.abs(d - d.T) > tol) or np.any(d < -tol):
                raise ConstructionError("distance table is not a metric")
            for k in range(n):
                if np.any(d > d[:, k:k + 1] + d[k:k + 1, :] + tol):
                    raise ConstructionError("triangle inequality fails")
            return
        rng = np.random.default_rng(seed)
        x, y, z = rng.integers(0, n, size=(3, sample))
        dxy = self._pairwise(x, y)
        dyz = self._pairwise(y, z)
        dxz = self._pairwise(x, z)
        if np.any(dxz > dxy + dyz + tol) or np.any(dxy < -tol):
            raise ConstructionError("triangle inequality fails on sampled triples")
        if np.any(np.abs(self._pairwise(x, x)) > tol) or np.any(np.abs(dxy - self._pairwise(y, x)) > tol):
            raise ConstructionError("distance table is not a metric")

    def _pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.array([self.dist(int(i), int(j)) for i, j in zip(x, y)])

    def check_rays(self, tol: float = 1e-6) -> None:
        for r in self.rays:
            if len(r.points) < 2:
                raise ConstructionError(f"ray {r.label} has fewer than two points")
            d = self.dist_block([r.base], list(r.points))[0]
            if np.any(np.diff(d) <= 0):
                raise ConstructionError(f"ray {r.label} is not strictly moving away from its base")
            gaps = np.array([self.dist(a, b) for a, b in zip(r.points, r.points[1:])])
            if abs(gaps.sum() - d[-1]) > tol:
                raise ConstructionError(f"ray {r.label} is not geodesic")


# ---------------------------------------------------------------------------
# graphs


class GraphSpace(Space):
    """Weighted graph with a materialised all-pairs distance table."""

    kind = "graph"

    def __init__(self, labels, edges, rays_idx, truncation_radius=None,
                 description=None, kind="graph", ray_labels=None):
        n = len(labels)
        if n == 0:
            raise SpaceError("graph has no vertices")
        if n > DENSE_CAP:
            raise SpaceError(f"{n} points exceed the dense table cap of {DENSE_CAP}")
        adj: list[dict[int, float]] = [dict() for _ in range(n)]
        for i, j, w in edges:
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < n and 0 <= j < n):
                raise SpaceError(f"edge ({i}, {j}) references a missing vertex")
            if not w > 0:
                raise SpaceError(f"edge ({i}, {j}) has nonpositive weight {w}")
            if i == j:
                continue
            w = min(w, adj[i].get(j, math.inf))
            adj[i][j] = adj[j][i] = w
        self.adj = [dict(sorted(a.items())) for a in adj]
        rows, cols, vals = [], [], []
        for i, a in enumerate(self.adj):
            for j, w in a.items():
                rows.append(i)
                cols.append(j)
                vals.append(w)
        graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(graph, directed=False)
        if ncomp != 1:
            raise ConstructionError(f"graph is disconnected ({ncomp} components)")
        self._table = shortest_path(graph, method="D", directed=False)
        self._table.setflags(write=False)
        rays = []
        for k, seq in enumerate(rays_idx):
            label = ray_labels[k] if ray_labels else f"r{k}"
            rays.append(Ray(label, tuple(int(v) for v in seq)))
        if truncation_radius is None:
            truncation_radius = max((self._table[r.base, r.top] for r in rays), default=0.0)
        super().__init__(list(labels), rays, truncation_radius, description)
        self.kind = kind

    @property
    def table(self) -> np.ndarray:
        return self._table

    def dist_block(self, rows, cols) -> np.ndarray:
        return self._table[np.ix_(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))]

    def dist(self, i, j) -> float:
        return float(self._table[i, j])

    def dist_from(self, i) -> np.ndarray:
        return self._table[i]

    def _pairwise(self, x, y):
        return self._table[x, y]

    def _tight_next(self, u: int, b: int) -> list[int]:
        d = self._table
        return [v for v, w in self.adj[u].items() if abs(w + d[v, b] - d[u, b]) <= TOL]

    def geodesic(self, a: int, b: int) -> Geodesic:
        """Lexicographically smallest shortest path (greedy on tight edges)."""
        path, gaps = [a], []
        u = a
        while u != b:
            v = min(self._tight_next(u, b))
            gaps.append(self.adj[u][v])
            path.append(v)
            u = v
        return _chain(path, gaps, (a, b))

    def geodesics_all(self, a: int, b: int, budget: int = 64):
        """Depth-first enumeration of shortest paths in lexicographic order."""
        if budget < 1:
            raise ValueError("budget must be at least 1")
        out: list[Geodesic] = []
        # walk one past the budget to learn whether the enumeration is complete
        stack = [(a, [a], [])]
        while stack and len(out) <= budget:
            u, path, gaps = stack.pop()
            if u == b:
                out.append(_chain(path, gaps, (a, b)))
                continue
            for v in reversed(self._tight_next(u, b)):
                stack.append((v, path + [v], gaps + [self.adj[u][v]]))
        exhaustive = len(out) <= budget
        return out[:budget], exhaustive


def graph_space(desc: dict) -> GraphSpace:
    vertices = desc.get("vertices")
    edges = desc.get("edges", [])
    if vertices is None:
        n = 1 + max((max(int(e[0]), int(e[1])) for e in edges), default=-1)
        vertices = list(range(n))
    for e in edges:
        if len(e) not in (2, 3):
            raise SpaceError(f"malformed edge {e!r}")
    edges = [(e[0], e[1], e[2] if len(e) == 3 else 1.0) for e in edges]
    rays = desc.get("rays", [])
    labels = desc.get("ray_labels")
    space = GraphSpace(list(vertices), edges, rays, desc.get("truncation_radius"),
                       description=desc, ray_labels=labels)
    return space


# ---------------------------------------------------------------------------
# Cayley graph balls


def _f2_mult(word: tuple, g: str) -> tuple:
    inverse = g.swapcase()
    if word and word[-1] == inverse:
        return word[:-1]
    return word + (g,)


def _free_product_mult(word: tuple, g: str) -> tuple:
    # syllables: ("z2", (x, y)) or ("z", k)
    steps = {"a": ("z2", (1, 0)), "A": ("z2", (-1, 0)), "b": ("z2", (0, 1)),
             "B": ("z2", (0, -1)), "t": ("z", 1), "T": ("z", -1)}
    kind, step = steps[g]
    word = list(word)
    if word and word[-1][0] == kind:
        last = word.pop()[1]
        new = (last[0] + step[0], last[1] + step[1]) if kind == "z2" else last + step
        if new not in ((0, 0), 0):
            word.append((kind, new))
    else:
        word.append((kind, step))
    return tuple(word)


def _z2_mult(word: tuple, g: str) -> tuple:
    dx, dy = {"a": (1, 0), "A": (-1, 0), "b": (0, 1), "B": (0, -1)}[g]
    return (word[0] + dx, word[1] + dy)


CAYLEY_PRESETS = {
    "F2": dict(gens="aAbB", identity=(), mult=_f2_mult,
               rays={"a": "a", "A": "A", "b": "b", "B": "B", "ab": "ab", "aB": "aB"}),
    "Z2": dict(gens="aAbB", identity=(0, 0), mult=_z2_mult,
               rays={"a": "a", "A": "A", "b": "b", "B": "B", "ab": "ab"}),
    "Z2_star_Z": dict(gens="aAbBtT", identity=(), mult=_free_product_mult,
                      rays={"t": "t", "T": "T", "a": "a", "b": "b", "at": "at", "bT": "bT"}),
}


def _word_label(elem) -> str:
    if isinstance(elem, tuple) and len(elem) == 2 and all(isinstance(c, int) for c in elem):
        return f"({elem[0]},{elem[1]})"
    if all(isinstance(c, str) for c in elem):
        return "".join(elem) or "e"
    parts = []
    for kind, val in elem:
        if kind == "z2":
            parts.append(f"a^{val[0]}b^{val[1]}")
        else:
            parts.append(f"t^{val}")
    return "".join(parts) or "e"


def cayley_space(desc: dict) -> GraphSpace:
    preset = desc.get("preset")
    if preset not in CAYLEY_PRESETS:
        raise SpaceError(f"unknown Cayley preset {preset!r}; expected one of {sorted(CAYLEY_PRESETS)}")
    radius = int(desc.get("radius", 6))
    if radius < 1:
        raise SpaceError("radius must be positive")
    spec = CAYLEY_PRESETS[preset]
    mult = spec["mult"]
    index = {spec["identity"]: 0}
    elems = [spec["identity"]]
    frontier = [spec["identity"]]
    edges = []
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for g in spec["gens"]:
                v = mult(w, g)
                if v not in index:
                    if len(elems) >= DENSE_CAP:
                        raise SpaceError(f"Cayley ball exceeds the dense table cap of {DENSE_CAP}")
                    index[v] = len(elems)
                    elems.append(v)
                    nxt.append(v)
        frontier = nxt
    for w, i in index.items():
        for g in spec["gens"]:
            v = mult(w, g)
            if v in index and index[v] > i:
                edges.append((i, index[v], 1.0))
    rays, labels = [], []
    for lab, pattern in spec["rays"].items():
        seq, w = [0], spec["identity"]
        for step in itertools.cycle(pattern):
            v = mult(w, step)
            if v not in index:
                break
            seq.append(index[v])
            w = v
        rays.append(seq)
        labels.append(f"r_{lab}")
    return GraphSpace([_word_label(e) for e in elems], edges, rays, float(radius),
                      description=desc, kind="cayley-ball", ray_labels=labels)


# ---------------------------------------------------------------------------
# plane with rays


def preset_bases(preset: str, index_max: int, epsilon: float) -> dict[str, float]:
    """Base x-coordinates of the vertical rays, keyed by ray label."""
    bases: dict[str, float] = {}
    for m in range(-index_max, index_max + 1):
        if preset == "A":
            bases[f"r_{m}"] = float(m)
        elif preset == "B":
            bases[f"r_{m}"] = 0.5 * m * (m + 1) if m >= 0 else 0.5 * m * (1 - m)
        else:
            raise SpaceError(f"unknown plane preset {preset!r}")
    if preset == "A":
        bases["r'"] = float(epsilon)
        bases["r''"] = -float(epsilon)
    return bases


def ray_sort_key(label: str):
    if label.startswith("r_"):
        try:
            return (0, int(label[2:]), "")
        except ValueError:
            pass
    return (1, 0, label)


class PlaneRaysSpace(Space):
    """Sampled Euclidean plane with vertical rays attached along the x-axis.

    Points are stored as (in-plane position, height, ray id). A ray point of
    height ``h`` attached at base ``b`` is at distance ``h + |b - p|`` from a
    plane point ``p``; two points on distinct rays are at distance
    ``h1 + |b1 - b2| + h2``.
    """

    kind = "plane-with-rays"

    def __init__(self, bases: dict[str, float], truncation_radius: float, pitch: float,
                 margin: float, description=None):
        if pitch <= 0:
            raise SpaceError("pitch must be positive")
        if truncation_radius <= 0:
            raise SpaceError("truncation radius must be positive")
        self.pitch = float(pitch)
        xs = np.array(list(bases.values()))
        lo = math.floor((xs.min() - margin) / pitch)
        hi = math.ceil((xs.max() + margin) / pitch)
        ylim = math.ceil(margin / pitch)
        self._grid_lo = lo
        self._grid_ylim = ylim
        gi, gj = np.meshgrid(np.arange(lo, hi + 1), np.arange(-ylim, ylim + 1), indexing="ij")
        px = list((gi.ravel() * pitch).astype(float))
        py = list((gj.ravel() * pitch).astype(float))
        self._grid_shape = gi.shape
        self._extra: list[int] = []
        base_idx: dict[str, int] = {}
        for lab, b in sorted(bases.items(), key=lambda kv: kv[1]):
            k = round(b / pitch)
            if abs(k * pitch - b) <= TOL:
                base_idx[lab] = self._grid_index(k, 0)
            else:
                base_idx[lab] = len(px)
                self._extra.append(len(px))
                px.append(b)
                py.append(0.0)
        n_plane = len(px)
        h = [0.0] * n_plane
        rid = [-1] * n_plane
        heights = np.arange(1, int(math.floor(truncation_radius / pitch + TOL)) + 1) * pitch
        rays = []
        ordered = sorted(bases, key=ray_sort_key)
        self._ray_ids = {lab: k for k, lab in enumerate(ordered)}
        for lab in ordered:
            b = bases[lab]
            seq = [base_idx[lab]]
            for hh in heights:
                seq.append(len(px))
                px.append(b)
                py.append(0.0)
                h.append(float(hh))
                rid.append(self._ray_ids[lab])
            rays.append(Ray(lab, tuple(seq)))
        self.px = np.array(px)
        self.py = np.array(py)
        self.h = np.array(h)
        self.rid = np.array(rid, dtype=np.int64)
        self.n_plane = n_plane
        self.bases = dict(bases)
        labels = [(float(x), float(y), float(hh), int(r)) for x, y, hh, r in zip(px, py, h, rid)]
        super().__init__(labels, rays, truncation_radius, description)

    def _grid_index(self, i: int, j: int) -> int:
        ni, nj = self._grid_shape
        ii, jj = i - self._grid_lo, j + self._grid_ylim
        if not (0 <= ii < ni and 0 <= jj < nj):
            raise IndexError("grid coordinate outside the sampled plane")
        return ii * nj + jj

    @property
    def table(self) -> np.ndarray:
        if self.n > DENSE_CAP:
            raise SpaceError(f"{self.n} points exceed the dense table cap of {DENSE_CAP}")
        return self.dist_block(np.arange(self.n), np.arange(self.n))

    def dist_block(self, rows, cols) -> np.ndarray:
        r = np.asarray(rows, dtype=np.int64)[:, None]
        c = np.asarray(cols, dtype=np.int64)[None, :]
        planar = np.hypot(self.px[r] - self.px[c], self.py[r] - self.py[c])
        out = self.h[r] + self.h[c] + planar
        same = (self.rid[r] == self.rid[c]) & (self.rid[r] >= 0)
        if same.any():
            out = np.where(same, np.abs(self.h[r] - self.h[c]), out)
        return out

    def dist(self, i, j) -> float:
        if i == j:
            return 0.0
        if self.rid[i] >= 0 and self.rid[i] == self.rid[j]:
            return abs(float(self.h[i] - self.h[j]))
        return float(self.h[i] + self.h[j] + math.hypot(self.px[i] - self.px[j], self.py[i] - self.py[j]))

    def _pairwise(self, x, y):
        planar = np.hypot(self.px[x] - self.px[y], self.py[x] - self.py[y])
        out = self.h[x] + self.h[y] + planar
        same = (self.rid[x] == self.rid[y]) & (self.rid[x] >= 0)
        return np.where(same, np.abs(self.h[x] - self.h[y]), out)

    def ray_of(self, i: int) -> str | None:
        rid = int(self.rid[i])
        if rid < 0:
            return None
        for lab, k in self._ray_ids.items():
            if k == rid:
                return lab
        return None

    def foot(self, i: int) -> int:
        """Plane point where the point ``i`` attaches (itself for plane points)."""
        if self.rid[i] < 0:
            return int(i)
        return self.ray(self.ray_of(i)).base

    def _vertical(self, i: int) -> list[int]:
        """Ray points from ``i`` down to (excluding) its base."""
        if self.rid[i] < 0:
            return []
        ray = self.ray(self.ray_of(i))
        k = ray.points.index(int(i))
        return list(ray.points[k:0:-1])

    def segment_points(self, a: int, b: int) -> list[int]:
        """Sample points on the plane segment [a, b], ordered from a to b."""
        ax, ay, bx, by = self.px[a], self.py[a], self.px[b], self.py[b]
        p = self.pitch
        dx, dy = bx - ax, by - ay
        length = math.hypot(dx, dy)
        if length <= TOL:
            return [int(a)]
        found = {int(a): 0.0, int(b): length}
        if abs(dx) >= abs(dy):
            i0, i1 = sorted((ax / p, bx / p))
            cols = np.arange(math.ceil(i0 - TOL), math.floor(i1 + TOL) + 1)
            ys = ay + (cols * p - ax) * dy / dx
            js = ys / p
            ok = np.abs(js - np.round(js)) <= 1e-7
            ii, jj = cols[ok], np.round(js[ok]).astype(int)
        else:
            j0, j1 = sorted((ay / p, by / p))
            rows = np.arange(math.ceil(j0 - TOL), math.floor(j1 + TOL) + 1)
            xs = ax + (rows * p - ay) * dx / dy
            iis = xs / p
            ok = np.abs(iis - np.round(iis)) <= 1e-7
            ii, jj = np.round(iis[ok]).astype(int), rows[ok]
        for i, j in zip(ii, jj):
            try:
                k = self._grid_index(int(i), int(j))
            except IndexError:
                continue
            found.setdefault(k, math.hypot(self.px[k] - ax, self.py[k] - ay))
        for k in self._extra:
            t = ((self.px[k] - ax) * dx + (self.py[k] - ay) * dy) / length**2
            if -TOL <= t <= 1 + TOL:
                off = abs((self.px[k] - ax) * dy - (self.py[k] - ay) * dx) / length
                if off <= 1e-7:
                    found.setdefault(k, t * length)
        return [k for k, _ in sorted(found.items(), key=lambda kv: (kv[1], kv[0]))]

    def geodesic(self, a: int, b: int) -> Geodesic:
        a, b = int(a), int(b)
        if a == b:
            return _chain([a], [], (a, b))
        if self.rid[a] >= 0 and self.rid[a] == self.rid[b]:
            ray = self.ray(self.ray_of(a))
            ka, kb = ray.points.index(a), ray.points.index(b)
            seq = list(ray.points[ka:kb + 1]) if kb > ka else list(ray.points[kb:ka + 1])[::-1]
        else:
            down = [a] + self._vertical(a)[1:] if self.rid[a] >= 0 else []
            up = ([b] + self._vertical(b)[1:])[::-1] if self.rid[b] >= 0 else []
            mid = self.segment_points(self.foot(a), self.foot(b))
            seq = down + mid + up
        gaps = [self.dist(u, v) for u, v in zip(seq, seq[1:])]
        return _chain(seq, gaps, (a, b))

    def geodesics_all(self, a: int, b: int, budget: int = 64):
        # CAT(0): geodesics are unique.
        if budget < 1:
            raise ValueError("budget must be at least 1")
        return [self.geodesic(a, b)], True

    def reflect_index(self, i: int) -> int:
        """Index of the mirror image under (x, y) -> (-x, y), rays r_m <-> r_-m, r' <-> r''."""
        key = self._reflect_map()
        return key[int(i)]

    def _reflect_map(self) -> np.ndarray:
        if getattr(self, "_reflect_cache", None) is None:
            lookup = {}
            for k in range(self.n):
                lookup[(round(self.px[k] / TOL * 1e-3), round(self.py[k] / TOL * 1e-3),
                        round(self.h[k] / TOL * 1e-3), self.rid[k] >= 0)] = k
            out = np.empty(self.n, dtype=np.int64)
            for k in range(self.n):
                key = (round(-self.px[k] / TOL * 1e-3), round(self.py[k] / TOL * 1e-3),
                       round(self.h[k] / TOL * 1e-3), self.rid[k] >= 0)
                if key not in lookup:
                    raise SpaceError("sampled space is not mirror symmetric")
                out[k] = lookup[key]
            self._reflect_cache = out
        return self._reflect_cache


def plane_space(desc: dict) -> PlaneRaysSpace:
    preset = desc.get("preset", "A")
    if preset not in ("A", "B"):
        raise SpaceError(f"unknown plane preset {preset!r}")
    trunc = float(desc.get("truncation_radius", DEFAULT_TRUNCATION))
    pitch = float(desc.get("pitch", DEFAULT_PITCH))
    eps = float(desc.get("epsilon", DEFAULT_EPSILON))
    if not 0 < eps < 0.5:
        raise SpaceError("epsilon must lie in (0, 1/2)")
    index_max = desc.get("ray_index_max")
    if index_max is None:
        index_max = max(2, int(trunc // 2)) if preset == "A" else max(2, int(trunc // 5))
    bases = preset_bases(preset, int(index_max), eps)
    # the box must hold balls wide enough to see every base-to-base segment
    span = max(bases.values()) - min(bases.values())
    margin = float(desc.get("plane_margin", max(trunc / 2, span / 2 + 1)))
    return PlaneRaysSpace(bases, trunc, pitch, margin, description=desc)


# ---------------------------------------------------------------------------


def build_space(desc: dict | str | Path, check: bool = True) -> Space:
    """Build a space from a description dict or a JSON file path."""
    if isinstance(desc, (str, Path)):
        path = Path(desc)
        try:
            desc = json.loads(path.read_text())
        except FileNotFoundError:
            raise SpaceError(f"space description {str(path)!r} not found") from None
        except json.JSONDecodeError as exc:
            raise SpaceError(f"bad JSON in {str(path)!r}: {exc}") from None
    if not isinstance(desc, dict):
        raise SpaceError("space description must be a JSON object")
    kind = desc.get("type")
    if kind == "graph":
        space = graph_space(desc)
    elif kind == "cayley":
        space = cayley_space(desc)
    elif kind == "plane_with_rays":
        space = plane_space(desc)
    else:
        raise SpaceError(f"unknown space type {kind!r}")
    if check:
        space.check_metric()
        space.check_rays()
    return space


def geodesic(space: Space, a: int, b: int) -> Geodesic:
    return space.geodesic(a, b)


def geodesics_all(space: Space, a: int, b: int, budget: int = 64) -> tuple[list[Geodesic], bool]:
    return space.geodesics_all(a, b, budget)


def path_graph(n: int) -> dict:
    return {"type": "graph", "vertices": list(range(n)),
            "edges": [[i, i + 1, 1.0] for i in range(n - 1)]}


def cycle_graph(n: int) -> dict:
    return {"type": "graph", "vertices": list(range(n)),
            "edges": [[i, (i + 1) % n, 1.0] for i in range(n)]}


def tripod(leg: int, rays: bool = True) -> dict:
    """Star with three legs of ``leg`` unit edges; vertex 0 is the median."""
    edges, legs = [], []
    nxt = 1
    for _ in range(3):
        prev, seq = 0, [0]
        for _ in range(leg):
            edges.append([prev, nxt, 1.0])
            seq.append(nxt)
            prev = nxt
            nxt += 1
        legs.append(seq)
    desc = {"type": "graph", "vertices": list(range(nxt)), "edges": edges}
    if rays:
        desc["rays"] = legs
        desc["ray_labels"] = ["a", "b", "c"]
    return desc


def grid_graph(w: int, h: int) -> dict:
    idx = lambda x, y: x * h + y  # noqa: E731
    edges = []
    for x in range(w):
        for y in range(h):
            if x + 1 < w:
                edges.append([idx(x, y), idx(x + 1, y), 1.0])
            if y + 1 < h:
                edges.append([idx(x, y), idx(x, y + 1), 1.0])
    return {"type": "graph", "vertices": [f"({x},{y})" for x in range(w) for y in range(h)],
            "edges": edges}

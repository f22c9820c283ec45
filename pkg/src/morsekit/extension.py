"""Interior extension of a boundary map through coarse centers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bmaps import BoundaryMap, pair_contraction, qualifying_triples
from .boundary import default_inner_radius, tail
from .centers import center_set, coarse_center
from .spaces import PlaneRaysSpace, Space, SpaceError, ray_sort_key

ETA_SAFETY = 1.25


class ExtensionError(SpaceError):
    """A mathematical precondition of the extension failed."""


def default_sample(space: Space, step: float = 1.0, height_step: float = 1.0) -> np.ndarray:
    """Coarse sample of the interior: plane points on a unit grid and ray points at integer heights."""
    if isinstance(space, PlaneRaysSpace):
        on = lambda v, s: np.abs(np.round(v / s) * s - v) < 1e-9  # noqa: E731
        xs = np.array(list(space.bases.values()))
        plane = ((space.rid < 0) & on(space.px, step) & on(space.py, step)
                 & (space.px >= xs.min() - 1e-9) & (space.px <= xs.max() + 1e-9))
        rays = (space.rid >= 0) & on(space.h, height_step)
        return np.nonzero(plane | rays)[0]
    return np.arange(space.n)


def _triple_key(t) -> tuple:
    return tuple(ray_sort_key(v) for v in t)


@dataclass
class CenterIndex:
    """Coarse centers of the qualifying triples of one space."""

    space: Space
    triples: list
    centers: np.ndarray
    K_values: list

    @classmethod
    def build(cls, space: Space, triples, order: bool = True) -> "CenterIndex":
        triples = [tuple(t) for t in triples]
        if order:
            triples.sort(key=_triple_key)
        cs, Ks = [], []
        for t in triples:
            c, K = coarse_center(space, *t)
            cs.append(c)
            Ks.append(K)
        return cls(space, triples, np.asarray(cs, dtype=np.int64), Ks)

    def nearest(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Index of the nearest center (first triple on ties) and its distance."""
        d = self.space.dist_block(np.asarray(points, dtype=np.int64), self.centers)
        m = d.min(axis=1)
        k = np.argmax(d <= m[:, None] + 1e-9, axis=1)
        return k, m

    def diameter(self) -> float:
        """Largest diameter of a center set E_K over the triples."""
        return max((center_set(self.space, *t, k=K).diameter for t, K in zip(self.triples, self.K_values)),
                   default=0.0)


@dataclass(frozen=True)
class CoverReport:
    R: float
    worst_point: int | None
    centers: dict

    def __float__(self) -> float:
        return self.R


def cover_radius(space: Space, N0, sample=None, triples=None) -> CoverReport:
    """Largest distance from a sample point to its nearest coarse center, plus one."""
    if triples is None:
        triples = qualifying_triples(space, N0)
    if not triples:
        raise ExtensionError("the boundary has fewer than three points at this gauge")
    idx = CenterIndex.build(space, triples)
    sample = default_sample(space) if sample is None else np.asarray(sample, dtype=np.int64)
    _, m = idx.nearest(sample)
    k = int(np.argmax(m))
    return CoverReport(float(m[k]) + 1.0, int(sample[k]),
                       {"|".join(t): int(c) for t, c in zip(idx.triples, idx.centers)})


@dataclass
class ExtensionMap:
    f: BoundaryMap
    values: dict
    R: float
    N0_label: str
    N1_label: str
    source_index: CenterIndex
    target_index: CenterIndex
    assignment: dict
    config: dict = field(default_factory=dict)
    center_diameter: float = 0.0

    def __call__(self, x: int) -> int:
        return int(self.evaluate([x])[0])

    def evaluate(self, points, strict: bool = True) -> np.ndarray:
        """Image of arbitrary source points; -1 marks points farther than R from every center."""
        points = np.asarray(points, dtype=np.int64)
        k, m = self.source_index.nearest(points)
        out = self.target_index.centers[k].copy()
        far = m > self.R + 1e-9
        if far.any():
            if strict:
                raise ExtensionError(f"point {int(points[np.argmax(far)])} is farther than R={self.R:g} "
                                     "from every coarse center")
            out[far] = -1
        return out

    def to_dict(self) -> dict:
        return {"map": self.f.to_dict(), "R": self.R, "N0": self.N0_label, "N1": self.N1_label,
                "center_diameter": self.center_diameter, "config": self.config,
                "triples": ["|".join(t) for t in self.source_index.triples],
                "values": [[int(x), int(y)] for x, y in sorted(self.values.items())]}


def extend(f: BoundaryMap, source: Space | None = None, target: Space | None = None,
           config: dict | None = None) -> ExtensionMap:
    """Phi_f: send x to the image-triangle center of the triangle whose center is nearest to x.

    Config keys: ``N0`` (contraction level for source triples, default 2),
    ``sample`` (source points), ``R`` (cover radius; computed when absent).
    """
    source = f.source if source is None else source
    target = f.target if target is None else target
    config = dict(config or {})
    N0 = float(config.get("N0", 2.0))
    triples = qualifying_triples(source, N0, f.domain)
    if not triples:
        raise ExtensionError("the boundary has fewer than three points at this gauge")
    sidx = CenterIndex.build(source, triples)
    tidx = CenterIndex.build(target, [tuple(f(v) for v in t) for t in sidx.triples], order=False)
    sample = config.get("sample")
    sample = default_sample(source) if sample is None else np.asarray(sample, dtype=np.int64)
    k, m = sidx.nearest(sample)
    R = config.get("R")
    R = float(m.max()) + 1.0 if R is None else float(R)
    if np.any(m > R + 1e-9):
        bad = int(sample[int(np.argmax(m))])
        raise ExtensionError(f"no qualifying triangle has its center within R={R:g} of point {bad}")
    N1 = max(pair_contraction(target, a, b) for t in tidx.triples
             for a, b in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])))
    values = {int(x): int(tidx.centers[j]) for x, j in zip(sample, k)}
    assignment = {int(x): "|".join(sidx.triples[j]) for x, j in zip(sample, k)}
    diam = max(sidx.diameter(), tidx.diameter())
    cfg = {"N0": N0, "sample_size": int(len(sample))}
    return ExtensionMap(f, values, R, f"contr{N0:g}", f"contr{N1:g}", sidx, tidx, assignment, cfg, diam)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QIFit:
    K: float
    C: float
    D: float
    pairs: int

    def __iter__(self):
        return iter((self.K, self.C, self.D))

    def to_dict(self) -> dict:
        return {"K": self.K, "C": self.C, "D": self.D, "pairs": self.pairs}


def _qi_C(dx: np.ndarray, dy: np.ndarray, K: float) -> float:
    return float(max(0.0, np.max(dx / K - dy), np.max(dy - K * dx)))


def fit_qi_constants(ext: ExtensionMap, pair_sample=None, C_cap: float | None = None,
                     K_max: float = 1e3) -> QIFit:
    """Smallest K whose additive constant C(K) stays within ``C_cap``.

    C(K) = max over pairs of max(dX/K - dY, dY - K dX) never increases with
    K, so the smallest admissible K is found by bisection. The default cap is
    2 (R + center diameter), the displacement that re-centering alone can cause.
    """
    pts = np.asarray(sorted(ext.values) if pair_sample is None else pair_sample, dtype=np.int64)
    if len(pts) < 2:
        raise ValueError("need at least two mapped points")
    imgs = ext.evaluate(pts)
    src = ext.f.source
    dx = src.dist_block(pts, pts)
    dy = ext.f.target.dist_block(imgs, imgs)
    iu = np.triu_indices(len(pts), 1)
    dx, dy = dx[iu], dy[iu]
    keep = dx > 0
    dx, dy = dx[keep], dy[keep]
    cap = 2 * (ext.R + ext.center_diameter) if C_cap is None else C_cap
    if _qi_C(dx, dy, 1.0) <= cap:
        K = 1.0
    else:
        lo, hi = 1.0, K_max
        if _qi_C(dx, dy, hi) > cap:
            K = math.inf
        else:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if _qi_C(dx, dy, mid) <= cap:
                    hi = mid
                else:
                    lo = mid
            K = hi
    C = _qi_C(dx, dy, K) if math.isfinite(K) else math.inf
    unit = dx <= 1.0 + 1e-9
    D = float(dy[unit].max()) if unit.any() else 0.0
    return QIFit(K, C, D, int(len(dx)))


# ---------------------------------------------------------------------------


@dataclass
class EtaTable:
    thetas: list
    etas: list

    def __call__(self, theta: float) -> float:
        """Table value at the first grid point >= theta (the last value beyond the grid)."""
        for t, e in zip(self.thetas, self.etas):
            if t >= theta - 1e-12:
                return e
        return self.etas[-1] if self.etas else 0.0

    def to_dict(self) -> dict:
        return {"theta": self.thetas, "eta": self.etas}


def eta_modulus(ext: ExtensionMap, theta_grid=None) -> EtaTable:
    """Largest image-center distance over triple pairs whose centers are within theta.

    The table is made monotone by a running maximum.
    """
    sc, tc = ext.source_index.centers, ext.target_index.centers
    ds = ext.f.source.dist_block(sc, sc)
    dt = ext.f.target.dist_block(tc, tc)
    if theta_grid is None:
        theta_grid = sorted(set(np.round(ds.ravel(), 9).tolist()) | {ext.R, 1 + 2 * ext.R})
    thetas, etas, run = [], [], 0.0
    for th in sorted(float(t) for t in theta_grid):
        mask = ds <= th + 1e-9
        if not mask.any():
            continue
        run = max(run, float(dt[mask].max()))
        thetas.append(th)
        etas.append(run)
    return EtaTable(thetas, etas)


@dataclass(frozen=True)
class DefectReport:
    defect: float
    worst: int | None
    skipped: int

    def __float__(self) -> float:
        return self.defect


def quasi_inverse_defect(ext_f: ExtensionMap, ext_finv: ExtensionMap, sample=None) -> DefectReport:
    """max over y of d(y, Phi_f(Phi_{f^-1}(y)))."""
    ys = np.asarray(sorted(ext_finv.values) if sample is None else sample, dtype=np.int64)
    z = ext_finv.evaluate(ys, strict=False)
    ok = z >= 0
    skipped = int((~ok).sum())
    ys, z = ys[ok], z[ok]
    w = ext_f.evaluate(z, strict=False)
    ok = w >= 0
    skipped += int((~ok).sum())
    ys, w = ys[ok], w[ok]
    if len(ys) == 0:
        return DefectReport(0.0, None, skipped)
    d = np.array([ext_f.f.target.dist(int(a), int(b)) for a, b in zip(ys, w)])
    k = int(np.argmax(d))
    return DefectReport(float(d[k]), int(ys[k]), skipped)


def isometry_defect(ext: ExtensionMap, g, sample=None) -> float:
    """sup_x d(Phi_f(x), g(x)) for an ambient isometry given as an index map."""
    xs = np.asarray(sorted(ext.values) if sample is None else sample, dtype=np.int64)
    imgs = ext.evaluate(xs)
    gx = np.asarray([g(int(x)) for x in xs], dtype=np.int64)
    return float(max(ext.f.target.dist(int(a), int(b)) for a, b in zip(imgs, gx)))


def edge_rays(space: Space) -> set:
    """Rays with extremal base position; their tails have no centers beyond them."""
    if isinstance(space, PlaneRaysSpace):
        lo, hi = min(space.bases.values()), max(space.bases.values())
        return {lab for lab, b in space.bases.items() if b in (lo, hi)}
    return set()


def boundary_agreement(ext: ExtensionMap, f: BoundaryMap | None = None, inner_radius: float | None = None,
                       ambiguity: float = 1e-9) -> dict:
    """Classify the image of each ray tail by its nearest target ray.

    The distance from an image sequence to a ray is the directed Hausdorff
    distance from the image points to the ray samples. Rays at the edge of the
    truncated model are reported but excluded from the verdict.
    """
    f = ext.f if f is None else f
    src, tgt = f.source, f.target
    edge = edge_rays(src)
    rows, passed = [], True
    tgt_rays = sorted((r.label for r in tgt.rays), key=ray_sort_key)
    for p in f.domain:
        base = src.ray(p).base
        inner = default_inner_radius(src) if inner_radius is None else inner_radius
        pts = tail(src, base, p, inner)
        imgs = np.unique(ext.evaluate(pts, strict=False))
        imgs = imgs[imgs >= 0]
        if len(imgs) == 0:
            rows.append({"ray": p, "expected": f(p), "class": None, "status": "out-of-domain", "edge": p in edge})
            if p not in edge:
                passed = False
            continue
        dists = {q: float(tgt.dist_block(imgs, list(tgt.ray(q).points)).min(axis=1).max()) for q in tgt_rays}
        best = min(dists.values())
        winners = [q for q, v in dists.items() if v <= best + ambiguity]
        if len(winners) > 1:
            status = "inconclusive"
        else:
            status = "match" if winners[0] == f(p) else "mismatch"
        if p not in edge and status != "match":
            passed = False
        rows.append({"ray": p, "expected": f(p), "class": winners[0] if len(winners) == 1 else winners,
                     "distance": best, "status": status, "edge": p in edge})
    return {"passed": passed, "rays": rows, "excluded": sorted(edge, key=ray_sort_key)}

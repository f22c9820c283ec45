"""Coarse centers of ideal triangles spanned by three rays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryStratum, _label
from .spaces import Space

DEFAULT_REP_BUDGET = 8


def _side_key(p: str, q: str) -> tuple[str, str]:
    return (p, q) if p <= q else (q, p)


def side_distance(space: Space, p, q, rep_budget: int = DEFAULT_REP_BUDGET) -> np.ndarray:
    """d(x, [p, q]) for every point x, minimised over enumerated side representatives."""
    p, q = _label(p), _label(q)
    cache = space.__dict__.setdefault("_side_cache", {})
    key = (_side_key(p, q), rep_budget)
    if key not in cache:
        reps, _ = space.ray_geodesics_all(*key[0], budget=rep_budget)
        pts = np.unique(np.concatenate([g.points for g in reps]))
        cache[key] = space.dist_to_set(pts)
    return cache[key]


def triangle_distances(space: Space, a, b, c, rep_budget: int = DEFAULT_REP_BUDGET) -> np.ndarray:
    labels = [_label(a), _label(b), _label(c)]
    if len(set(labels)) != 3:
        raise ValueError("triangle vertices must be pairwise distinct")
    for lab in labels:
        space.ray(lab)
    return np.stack([side_distance(space, labels[i], labels[j], rep_budget)
                     for i, j in ((0, 1), (1, 2), (0, 2))])


def set_diameter(space: Space, pts: np.ndarray, chunk: int = 2048) -> float:
    if len(pts) < 2:
        return 0.0
    best = 0.0
    for s in range(0, len(pts), chunk):
        best = max(best, float(space.dist_block(pts[s:s + chunk], pts).max()))
    return best


@dataclass
class CenterSet:
    triple: tuple[str, str, str]
    k: float
    points: np.ndarray
    diameter: float
    K_value: float

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {"triple": list(self.triple), "k": self.k, "K_value": self.K_value,
                "diameter": self.diameter, "points": [int(p) for p in self.points]}


def _kstar(dist: np.ndarray) -> tuple[float, int]:
    worst = dist.max(axis=0)
    x = int(np.argmin(worst))
    return float(worst[x]), x


def center_set(space: Space, a, b, c, k: float, rep_budget: int = DEFAULT_REP_BUDGET) -> CenterSet:
    """E_k(a, b, c): points within k of each side of the triangle."""
    dist = triangle_distances(space, a, b, c, rep_budget)
    kstar, _ = _kstar(dist)
    pts = np.nonzero(dist.max(axis=0) <= k + 1e-9)[0]
    return CenterSet((_label(a), _label(b), _label(c)), float(k), pts, set_diameter(space, pts), 1.0 + kstar)


def coarse_center(space: Space, a, b, c, rep_budget: int = DEFAULT_REP_BUDGET) -> tuple[int, float]:
    """Coarse center and K(a, b, c) = 1 + inf{k : E_k nonempty}.

    The infimum is a minimum over the finite sample, so it is computed exactly.
    The representative is the point of E_K that is closest to all three sides,
    ties going to the smaller index.
    """
    dist = triangle_distances(space, a, b, c, rep_budget)
    kstar, x = _kstar(dist)
    return x, 1.0 + kstar


@dataclass(frozen=True)
class StabilityResult:
    displacement: float
    hausdorff: float
    vertex_distance: float | None
    flagged: bool

    def __float__(self) -> float:
        return self.displacement


def center_stability(space: Space, stratum: BoundaryStratum | None, triple, perturbed,
                     lam: float | None = None, rep_budget: int = DEFAULT_REP_BUDGET) -> StabilityResult:
    """Displacement of the coarse center when the triangle's vertices move.

    With a stratum and ``lam``, the move is flagged when corresponding vertices
    are more than ``lam`` apart in the stratum metric.
    """
    triple = [_label(t) for t in triple]
    perturbed = [_label(t) for t in perturbed]
    vdist = None
    flagged = False
    if stratum is not None:
        for t in triple + perturbed:
            if t not in stratum:
                raise KeyError(f"{t} is not in the stratum")
        vdist = max(stratum.d(p, q) for p, q in zip(triple, perturbed))
        flagged = lam is not None and vdist > lam
    x, K = coarse_center(space, *triple, rep_budget=rep_budget)
    y, K2 = coarse_center(space, *perturbed, rep_budget=rep_budget)
    E = center_set(space, *triple, k=K, rep_budget=rep_budget).points
    F = center_set(space, *perturbed, k=K2, rep_budget=rep_budget).points
    d = space.dist_block(E, F)
    haus = float(max(d.min(axis=1).max(), d.min(axis=0).max()))
    return StabilityResult(space.dist(x, y), haus, vdist, flagged)


def default_diameter_bound(k: float, slim: float, multiplier: float = 4.0) -> float:
    return multiplier * k + multiplier * slim


def triangle_sides(space: Space, a, b, c):
    a, b, c = _label(a), _label(b), _label(c)
    return [space.ray_geodesic(a, b), space.ray_geodesic(b, c), space.ray_geodesic(a, c)]


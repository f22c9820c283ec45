"""Discretised Morse boundary: ray classes, products at infinity and strata."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolicity import (MetricTable, VisualMetricParams, choose_epsilon, four_point_delta,
                            products_table, visual_metric)
from .morse import GaugeTable, geodesic_not_refuted, morse_gauge_lower
from .spaces import Space

INF_TAG = "INF"
DELTA_SAMPLE = 150


@dataclass(frozen=True)
class BoundaryPoint:
    label: str

    def __str__(self) -> str:
        return self.label


def _label(p) -> str:
    return p.label if isinstance(p, BoundaryPoint) else str(p)


def default_inner_radius(space: Space) -> float:
    return space.truncation_radius / 2


def tail(space: Space, basepoint: int, p, inner_radius: float | None = None) -> np.ndarray:
    """Ray samples at distance at least ``inner_radius`` from the basepoint."""
    inner = default_inner_radius(space) if inner_radius is None else inner_radius
    ray = space.ray(_label(p))
    pts = np.asarray(ray.points, dtype=np.int64)
    d = space.dist_block([basepoint], pts)[0]
    out = pts[d >= inner - 1e-9]
    if len(out) == 0:
        raise ValueError(f"ray {ray.label} never leaves the radius {inner:g} ball; "
                         "increase the truncation radius")
    return out


def boundary_product(space: Space, basepoint: int, p, q, inner_radius: float | None = None) -> float:
    """Truncated liminf of (x_n . y_m) over tail samples; ``inf`` when p = q."""
    if _label(p) == _label(q):
        return math.inf
    tp, tq = tail(space, basepoint, p, inner_radius), tail(space, basepoint, q, inner_radius)
    dp = space.dist_block([basepoint], tp)[0]
    dq = space.dist_block([basepoint], tq)[0]
    d = space.dist_block(tp, tq)
    return float(max(0.0, (0.5 * (dp[:, None] + dq[None, :] - d)).min()))


def boundary_products(space: Space, basepoint: int, labels, inner_radius: float | None = None) -> np.ndarray:
    labels = [_label(p) for p in labels]
    n = len(labels)
    out = np.full((n, n), math.inf)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = boundary_product(space, basepoint, labels[i], labels[j], inner_radius)
    return out


def tail_hausdorff(space: Space, basepoint: int, p, q, inner_radius: float | None = None) -> float:
    tp, tq = tail(space, basepoint, p, inner_radius), tail(space, basepoint, q, inner_radius)
    d = space.dist_block(tp, tq)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def distinct_rays(space: Space, basepoint: int, p, q, delta: float, inner_radius: float | None = None) -> bool:
    """Rays name different boundary points when their tails are > 2*delta + 1 apart."""
    return tail_hausdorff(space, basepoint, p, q, inner_radius) > 2 * delta + 1


def subsample(points, cap: int = DELTA_SAMPLE) -> np.ndarray:
    pts = np.unique(np.asarray(points, dtype=np.int64))
    if len(pts) <= cap:
        return pts
    keep = np.unique(np.linspace(0, len(pts) - 1, cap).round().astype(int))
    return pts[keep]


def dist_to_geodesic(space: Space, x: int, p, q) -> float:
    g = space.ray_geodesic(_label(p), _label(q))
    return float(space.dist_block([x], g.points)[0].min())


def dist_gp_gap(space: Space, basepoint: int, p, q, inner_radius: float | None = None) -> float:
    """|(p.q)_x0 - d(x0, [p, q])| for the truncated bi-infinite geodesic."""
    return abs(boundary_product(space, basepoint, p, q, inner_radius) - dist_to_geodesic(space, basepoint, p, q))


# ---------------------------------------------------------------------------


@dataclass
class BoundaryStratum:
    basepoint: int
    gauge_label: str
    members: list
    metric: MetricTable
    epsilon: float
    delta: float
    products: np.ndarray
    inner_radius: float
    refuted: list = field(default_factory=list)

    def __contains__(self, p) -> bool:
        return _label(p) in self.members

    def index(self, p) -> int:
        return self.members.index(_label(p))

    def d(self, p, q) -> float:
        return float(self.metric.values[self.index(p), self.index(q)])

    def product(self, p, q) -> float:
        return float(self.products[self.index(p), self.index(q)])

    @property
    def params(self) -> VisualMetricParams:
        return VisualMetricParams(self.basepoint, self.epsilon, self.delta)

    def to_dict(self) -> dict:
        prods = [[INF_TAG if math.isinf(v) else float(v) for v in row] for row in self.products]
        return {"basepoint": self.basepoint, "gauge": self.gauge_label, "members": list(self.members),
                "refuted": list(self.refuted), "epsilon": self.epsilon, "delta": self.delta,
                "inner_radius": self.inner_radius, "products": prods,
                "metric": [[float(v) for v in row] for row in self.metric.values]}


def stratum_points(space: Space, basepoint: int, labels) -> np.ndarray:
    """Point set spanned by the geodesics from the basepoint to the member rays."""
    pts = [np.asarray([basepoint])]
    for lab in labels:
        pts.append(space.geodesic_to_ray(basepoint, lab).points)
        pts.append(np.asarray(space.ray(lab).points))
    return np.unique(np.concatenate(pts))


def stratum_delta(space: Space, basepoint: int, labels, cap: int = DELTA_SAMPLE) -> float:
    pts = subsample(stratum_points(space, basepoint, labels), cap)
    return four_point_delta(space, pts).delta


def boundary_stratum(space: Space, basepoint: int, gauge_bound: GaugeTable, rays=None,
                     budget: int = 200, seed: int = 0, inner_radius: float | None = None,
                     eps_max: float = 1.0) -> BoundaryStratum:
    """Rays whose geodesic from ``basepoint`` is not refuted at ``gauge_bound``."""
    labels = [r.label for r in space.rays] if rays is None else [_label(r) for r in rays]
    inner = default_inner_radius(space) if inner_radius is None else inner_radius
    members, refuted = [], []
    for lab in labels:
        g = space.geodesic_to_ray(basepoint, lab)
        (members if geodesic_not_refuted(space, g, gauge_bound, budget, seed) else refuted).append(lab)
    delta = stratum_delta(space, basepoint, members) if members else 0.0
    eps = choose_epsilon(delta, eps_max)
    prods = boundary_products(space, basepoint, members, inner)
    metric = visual_metric(prods, VisualMetricParams(basepoint, eps, delta), points=members)
    return BoundaryStratum(int(basepoint), gauge_bound.label, members, metric, eps, delta, prods, inner, refuted)


def annulus(stratum: BoundaryStratum, center, a: float, r: float) -> list:
    """Members q with a <= d(q, center) <= a r."""
    if a <= 0 or r < 1:
        raise ValueError("need a > 0 and r >= 1")
    if center not in stratum:
        raise KeyError(f"{_label(center)} is not in the stratum")
    row = stratum.metric.values[stratum.index(center)]
    tol = 1e-12
    return [m for m, v in zip(stratum.members, row)
            if m != _label(center) and a - tol <= v <= a * r + tol]


def gp_slack_violation(stratum: BoundaryStratum) -> float:
    """Largest violation of (x.y) >= min{(x.z), (y.z)} - 2 delta over member triples."""
    P = stratum.products
    n = len(P)
    worst = 0.0
    for z in range(n):
        m = np.minimum(P[:, z][:, None], P[z, :][None, :])
        with np.errstate(invalid="ignore"):
            viol = m - 2 * stratum.delta - P
        viol = np.where(np.isnan(viol), -np.inf, viol)
        np.fill_diagonal(viol, -np.inf)
        viol[z, :] = -np.inf
        viol[:, z] = -np.inf
        worst = max(worst, float(viol.max(initial=0.0)))
    return worst


# ---------------------------------------------------------------------------


def _admitted_tail(space: Space, basepoint: int, p, gauge: GaugeTable, inner_radius, samples: int,
                   budget: int, seed: int) -> np.ndarray:
    t = tail(space, basepoint, p, inner_radius)
    idx = np.unique(np.linspace(0, len(t) - 1, min(samples, len(t))).round().astype(int))
    keep = []
    for x in t[idx]:
        g = space.geodesic(int(x), basepoint)
        if morse_gauge_lower(space, g, gauge.grid, budget=budget, seed=seed).within(gauge):
            keep.append(int(x))
    return np.asarray(keep, dtype=np.int64)


def restricted_product(space: Space, basepoint: int, p, q, gauge: GaugeTable, inner_radius=None,
                       samples: int = 8, budget: int = 100, seed: int = 0) -> float:
    """Product at infinity computed along tail samples admitted to the stratum of ``gauge``.

    The supremum over admitted tail subsequences of the truncated liminf is
    attained by the outermost admitted samples.
    """
    tp = _admitted_tail(space, basepoint, p, gauge, inner_radius, samples, budget, seed)
    tq = _admitted_tail(space, basepoint, q, gauge, inner_radius, samples, budget, seed)
    if len(tp) == 0 or len(tq) == 0:
        raise ValueError(f"{_label(p) if len(tp) == 0 else _label(q)} is not in the stratum {gauge.label}")
    if _label(p) == _label(q):
        return math.inf
    dp = space.dist_block([basepoint], tp)[0]
    dq = space.dist_block([basepoint], tq)[0]
    x, y = tp[int(np.argmax(dp))], tq[int(np.argmax(dq))]
    return float(products_table(space, basepoint, [x, y])[0, 1])


def gauge_drift(space: Space, basepoint: int, p, q, gaugeN: GaugeTable, gaugeN2: GaugeTable,
                inner_radius=None, samples: int = 8, budget: int = 100, seed: int = 0) -> tuple[float, float]:
    """Restricted products of p and q in the strata of two gauges."""
    a = restricted_product(space, basepoint, p, q, gaugeN, inner_radius, samples, budget, seed)
    b = restricted_product(space, basepoint, p, q, gaugeN2, inner_radius, samples, budget, seed)
    return a, b

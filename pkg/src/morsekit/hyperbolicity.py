"""Gromov products, the four-point constant and visual metrics."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numba
import numpy as np

from .spaces import Space

# the bundled TBB is too old for numba; avoid the noisy fallback probe
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "workqueue"

REAL_MAX_LOG = math.log(sys.float_info.max)
SQRT2_LOG = 0.5 * math.log(2.0)


def _table(space_or_table, points=None) -> np.ndarray:
    if isinstance(space_or_table, Space):
        idx = np.arange(space_or_table.n) if points is None else np.asarray(points, dtype=np.int64)
        return space_or_table.dist_block(idx, idx)
    d = np.asarray(space_or_table, dtype=float)
    if points is not None:
        idx = np.asarray(points, dtype=np.int64)
        d = d[np.ix_(idx, idx)]
    return d


def gromov_product(space: Space, x: int, y: int, w: int) -> float:
    """(x.y)_w = (d(w,x) + d(w,y) - d(x,y)) / 2."""
    val = 0.5 * (space.dist(w, x) + space.dist(w, y) - space.dist(x, y))
    return max(val, 0.0)


def products_table(space_or_table, basepoint: int, points=None) -> np.ndarray:
    """Gromov products based at ``basepoint`` between all pairs of ``points``.

    ``basepoint`` is a point index of the space (or row of the table), not a
    position inside ``points``.
    """
    if isinstance(space_or_table, Space):
        idx = np.arange(space_or_table.n) if points is None else np.asarray(points, dtype=np.int64)
        d = space_or_table.dist_block(idx, idx)
        dw = space_or_table.dist_block([basepoint], idx)[0]
    else:
        full = np.asarray(space_or_table, dtype=float)
        idx = np.arange(len(full)) if points is None else np.asarray(points, dtype=np.int64)
        d = full[np.ix_(idx, idx)]
        dw = full[basepoint, idx]
    return np.maximum(0.5 * (dw[:, None] + dw[None, :] - d), 0.0)


@numba.njit(cache=True, parallel=True)
def _delta_rows(d):
    # branch-free inner loop so it vectorises; witnesses are found afterwards
    n = d.shape[0]
    best = np.zeros(n)
    for i in numba.prange(n):
        bi = 0.0
        for j in range(i + 1, n):
            dij = d[i, j]
            for k in range(j + 1, n):
                dik = d[i, k]
                djk = d[j, k]
                for l in range(k + 1, n):
                    s1 = dij + d[k, l]
                    s2 = dik + d[j, l]
                    s3 = d[i, l] + djk
                    top = max(max(s1, s2), s3)
                    bot = min(min(s1, s2), s3)
                    gap = 2.0 * top + bot - s1 - s2 - s3
                    bi = max(bi, gap)
        best[i] = 0.5 * bi
    return best


@numba.njit(cache=True)
def _delta_witness(d, i, target):
    n = d.shape[0]
    for j in range(i + 1, n):
        for k in range(j + 1, n):
            for l in range(k + 1, n):
                s1 = d[i, j] + d[k, l]
                s2 = d[i, k] + d[j, l]
                s3 = d[i, l] + d[j, k]
                top = max(max(s1, s2), s3)
                bot = min(min(s1, s2), s3)
                if 0.5 * (2.0 * top + bot - s1 - s2 - s3) >= target:
                    return j, k, l
    return -1, -1, -1


@dataclass(frozen=True)
class DeltaResult:
    delta: float
    witness: tuple[int, int, int, int] | None
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"delta": self.delta, "degenerate": self.degenerate,
                "witness": list(self.witness) if self.witness else None}


def _order_witness(d: np.ndarray, q: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    # return (w, x, y, z) with d(x,y) + d(w,z) the largest pair sum
    i, j, k, l = q
    pairings = [((i, j), (k, l)), ((i, k), (j, l)), ((i, l), (j, k))]
    sums = [d[a] + d[b] for a, b in pairings]
    (x, y), (w, z) = pairings[int(np.argmax(sums))]
    return (w, x, y, z)


def four_point_delta(space_or_table, subset=None) -> DeltaResult:
    """Exhaustive four-point hyperbolicity constant.

    The maximum over ordered quadruples of min{(x.z)_w, (z.y)_w} - (x.y)_w
    equals half the gap between the two largest of the three pair sums of an
    unordered quadruple, so only combinations are scanned. The witness is
    returned in the original point indices as (w, x, y, z).
    """
    idx = None if subset is None else np.asarray(sorted(set(int(s) for s in subset)), dtype=np.int64)
    d = np.ascontiguousarray(_table(space_or_table, idx))
    n = len(d)
    if n < 4:
        return DeltaResult(0.0, None, degenerate=True)
    best = _delta_rows(d)
    i = int(np.argmax(best))
    if best[i] <= 0:
        return DeltaResult(0.0, None)
    j, k, l = _delta_witness(d, i, best[i])
    w = _order_witness(d, (i, int(j), int(k), int(l)))
    if idx is not None:
        w = tuple(int(idx[v]) for v in w)
    return DeltaResult(float(best[i]), w)


def four_point_value(d: np.ndarray, w: int, x: int, y: int, z: int) -> float:
    gp = lambda a, b: 0.5 * (d[w, a] + d[w, b] - d[a, b])  # noqa: E731
    return min(gp(x, z), gp(z, y)) - gp(x, y)


def choose_epsilon(delta: float, eps_max: float = 1.0) -> float:
    """Largest admissible visibility parameter, capped at ``eps_max``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return float(eps_max)
    return float(min(eps_max, SQRT2_LOG / (2.0 * delta)))


@dataclass(frozen=True)
class VisualMetricParams:
    basepoint: int
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def admissible(self) -> bool:
        return math.exp(2 * self.delta * self.epsilon) <= math.sqrt(2) + 1e-12


@dataclass
class MetricTable:
    points: list
    values: np.ndarray
    flagged: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, p) -> int:
        return self.points.index(p)

    def d(self, p, q) -> float:
        return float(self.values[self.index(p), self.index(q)])


def _floyd_warshall(w: np.ndarray) -> np.ndarray:
    d = w.copy()
    for k in range(len(d)):
        np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :], out=d)
    return d


def visual_weights(products: np.ndarray, epsilon: float) -> tuple[np.ndarray, list]:
    """Edge weights exp(-eps * product), with the underflow cap applied."""
    p = np.asarray(products, dtype=float)
    cap = REAL_MAX_LOG / epsilon
    over = p > cap
    w = np.exp(-epsilon * np.minimum(p, cap))
    w[over] = 0.0
    np.fill_diagonal(w, 0.0)
    flagged = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(over, 1)))]
    return w, flagged


def visual_metric(products: np.ndarray, params: VisualMetricParams, points=None) -> MetricTable:
    """Chain-infimum visual metric d_{p,eps}.

    A shortest chain never repeats a point, so all-pairs shortest paths on the
    complete graph with weights exp(-eps * product) give the infimum exactly.
    """
    p = np.asarray(products, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("products must be a square table")
    if np.any(np.isnan(p)):
        raise ValueError("products must not contain NaN")
    w, flagged = visual_weights(p, params.epsilon)
    d = _floyd_warshall(w)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    pts = list(range(len(p))) if points is None else list(points)
    return MetricTable(pts, d, flagged)


def sandwich_bounds(products: np.ndarray, params: VisualMetricParams) -> tuple[np.ndarray, np.ndarray]:
    upper = np.exp(-params.epsilon * np.asarray(products, dtype=float))
    lower = (3.0 - 2.0 * math.exp(2 * params.delta * params.epsilon)) * upper
    n = len(upper)
    upper[np.arange(n), np.arange(n)] = 0.0
    lower[np.arange(n), np.arange(n)] = 0.0
    return lower, upper


def sandwich_violation(products: np.ndarray, metric: MetricTable, params: VisualMetricParams) -> float:
    """Largest violation of lower <= d <= upper (0 when the sandwich holds)."""
    lower, upper = sandwich_bounds(products, params)
    d = metric.values
    return float(max(np.max(lower - d, initial=0.0), np.max(d - upper, initial=0.0)))


@dataclass(frozen=True)
class EquivalenceResult:
    k: float
    worst_pair: tuple[int, int] | None
    incomparable: list

    def to_dict(self) -> dict:
        return {"k": self.k, "worst_pair": list(self.worst_pair) if self.worst_pair else None,
                "incomparable": [list(p) for p in self.incomparable]}


def b_equivalence(m1: MetricTable, eps1: float, m2: MetricTable, eps2: float) -> EquivalenceResult:
    """Smallest k >= 1 with k^-1 m2^eps1 <= m1^eps2 <= k m2^eps1 on all pairs."""
    a = np.asarray(m1.values, dtype=float)
    b = np.asarray(m2.values, dtype=float)
    if a.shape != b.shape:
        raise ValueError("metric tables must share a point set")
    iu = np.triu_indices(len(a), 1)
    x, y = a[iu], b[iu]
    zx, zy = x <= 0, y <= 0
    bad = zx != zy
    incomparable = [(int(iu[0][t]), int(iu[1][t])) for t in np.nonzero(bad)[0]]
    ok = ~zx & ~zy
    if not ok.any():
        return EquivalenceResult(1.0 if not incomparable else math.inf, None, incomparable)
    logs = np.abs(eps2 * np.log(x[ok]) - eps1 * np.log(y[ok]))
    t = int(np.argmax(logs))
    pos = np.nonzero(ok)[0][t]
    k = float(max(1.0, math.exp(logs[t])))
    if incomparable:
        k = math.inf
    return EquivalenceResult(k, (int(iu[0][pos]), int(iu[1][pos])), incomparable)

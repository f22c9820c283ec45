import math

import numpy as np
import pytest

from morsekit.boundary import (BoundaryPoint, annulus, boundary_product, boundary_stratum, dist_gp_gap,
                               distinct_rays, gauge_drift, gp_slack_violation, restricted_product, tail)
from morsekit.hyperbolicity import four_point_delta, sandwich_violation
from morsekit.morse import GaugeTable
from morsekit.reports import canonical
from morsekit.spaces import build_space, tripod

from conftest import plane_origin


def test_tripod_products(tripod_space):
    X = tripod_space
    assert boundary_product(X, 0, "a", "b") == 0.0
    tip = X.ray("a").top
    # seen from the tip of leg a, legs b and c share the whole of leg a
    assert boundary_product(X, tip, "b", "c", inner_radius=7) == 6.0
    assert math.isinf(boundary_product(X, 0, "a", BoundaryPoint("a")))


def test_tail_needs_room(tripod_space):
    with pytest.raises(ValueError):
        tail(tripod_space, 0, "a", inner_radius=100)


def test_plane_products_follow_the_base_formula(planeA_small, planeA_stratum):
    # for rays based at a and b and basepoint at the origin: (|a| + |b| - |a - b|) / 2
    X, S = planeA_small, planeA_stratum
    for i, p in enumerate(S.members):
        for q in S.members[i + 1:]:
            a, b = X.bases[p], X.bases[q]
            assert S.product(p, q) == pytest.approx(0.5 * (abs(a) + abs(b) - abs(a - b)), abs=1e-9)


def test_dist_gp_lemma_on_trees_is_exact(tripod_space):
    for p, q in (("a", "b"), ("b", "c"), ("a", "c")):
        assert dist_gp_gap(tripod_space, 0, p, q) == 0.0


def test_stratum_sandwich_and_slack(planeA_stratum):
    S = planeA_stratum
    assert S.refuted == []
    assert sandwich_violation(S.products, S.metric, S.params) <= 1e-9
    assert gp_slack_violation(S) == 0.0


def test_stratum_serialises_infinity(planeA_stratum):
    text = canonical(planeA_stratum.to_dict())
    assert '"INF"' in text and "Infinity" not in text


def test_stratum_refutes_with_tiny_gauge():
    X = build_space({"type": "cayley", "preset": "Z2", "radius": 6})
    S = boundary_stratum(X, 0, GaugeTable.constant(0.0, [(3.0, 0.0)]), budget=200)
    # axis rays of Z^2 are not Morse: wide detours stay quasi-geodesic
    assert S.refuted


def test_annulus(planeA_stratum):
    S = planeA_stratum
    ring = annulus(S, "r_0", S.d("r_0", "r_1"), 1.0)
    assert "r_1" in ring and "r_0" not in ring
    with pytest.raises(ValueError):
        annulus(S, "r_0", 0.0, 2.0)


def test_distinct_rays(tripod_space):
    assert distinct_rays(tripod_space, 0, "a", "b", delta=0.0)


def test_restricted_product_on_tree(tripod_space):
    big = GaugeTable.constant(100.0)
    assert restricted_product(tripod_space, 0, "a", "b", big) == boundary_product(tripod_space, 0, "a", "b")
    a, b = gauge_drift(tripod_space, 0, "a", "b", big, GaugeTable.constant(200.0))
    assert a == b


def test_f2_stratum_delta_zero(f2_ball):
    S = boundary_stratum(f2_ball, 0, GaugeTable.from_contraction(1.0), budget=50)
    assert S.delta == 0.0
    assert four_point_delta(f2_ball, np.arange(0, f2_ball.n, 3)).delta == 0.0
    assert gp_slack_violation(S) == 0.0

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morsekit.spaces import (SpaceError, build_space, cycle_graph, grid_graph, path_graph, tripod)


def test_path_graph_metric_is_index_gap():
    X = build_space(path_graph(7))
    i, j = np.meshgrid(np.arange(7), np.arange(7), indexing="ij")
    assert np.array_equal(X.table, np.abs(i - j).astype(float))


def test_cycle_wraps():
    X = build_space(cycle_graph(6))
    assert X.dist(0, 5) == 1.0 and X.dist(0, 3) == 3.0


def test_cycle_tie_break_is_lexicographic():
    X = build_space(cycle_graph(4))
    assert list(X.geodesic(0, 2).points) == [0, 1, 2]


def test_disconnected_graph_rejected():
    with pytest.raises(SpaceError):
        build_space({"type": "graph", "vertices": [0, 1, 2], "edges": [[0, 1, 1.0]]})


def test_missing_and_bad_files(tmp_path):
    with pytest.raises(SpaceError):
        build_space(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(SpaceError):
        build_space(bad)
    with pytest.raises(SpaceError):
        build_space({"type": "moebius"})


@pytest.mark.parametrize("radius", [1, 2, 3, 6])
def test_free_group_ball_size(radius):
    # reduced words of length <= r in a rank-2 free group: 2*3^r - 1
    X = build_space({"type": "cayley", "preset": "F2", "radius": radius}, check=radius <= 3)
    assert X.n == 2 * 3 ** radius - 1


def test_z2_ball_size_and_geodesic_count(z2_ball):
    assert z2_ball.n == 2 * 4 * 5 + 1  # |x|+|y| <= 4
    a, b = z2_ball.labels.index("(0,0)"), z2_ball.labels.index("(2,2)")
    gs, exhaustive = z2_ball.geodesics_all(a, b, budget=64)
    assert exhaustive and len(gs) == math.comb(4, 2)
    assert len({tuple(g.points) for g in gs}) == 6


def test_grid_geodesic_enumeration_matches_binomial():
    X = build_space(grid_graph(4, 3))
    gs, exhaustive = X.geodesics_all(0, X.n - 1, budget=100)
    assert exhaustive and len(gs) == math.comb(3 + 2, 2)
    for g in gs:
        assert X.point_geodesic_is_valid(g)


def test_geodesic_budget_reports_truncation():
    X = build_space(grid_graph(4, 4))
    gs, exhaustive = X.geodesics_all(0, X.n - 1, budget=5)
    assert len(gs) == 5 and not exhaustive


def test_cayley_rays_are_geodesic(f2_ball):
    f2_ball.check_rays()
    for r in f2_ball.rays:
        d = f2_ball.dist_block([r.base], r.points)[0]
        assert np.array_equal(d, np.arange(len(r.points), dtype=float))


def test_tripod_median():
    X = build_space(tripod(3))
    a, b, c = (X.ray(l).top for l in "abc")
    gp = 0.5 * (X.dist(a, b) + X.dist(a, c) - X.dist(b, c))
    assert gp == 3.0  # the legs meet at vertex 0


# plane-with-rays ---------------------------------------------------------------

def _coords(X, i):
    return float(X.px[i]), float(X.py[i]), float(X.h[i])


def _brute_plane_dist(X, i, j):
    """Independent closed form: height + in-plane Euclidean gap + height."""
    xi, yi, hi = _coords(X, i)
    xj, yj, hj = _coords(X, j)
    if X.rid[i] >= 0 and X.rid[i] == X.rid[j]:
        return abs(hi - hj)
    return hi + math.hypot(xi - xj, yi - yj) + hj


def test_plane_distance_matches_closed_form(planeA_small):
    X = planeA_small
    rng = np.random.default_rng(3)
    idx = rng.choice(X.n, size=200, replace=False)
    D = X.dist_block(idx, idx)
    for a, b in itertools.product(range(40), range(40)):
        assert D[a, b] == pytest.approx(_brute_plane_dist(X, idx[a], idx[b]), abs=1e-9)


def test_plane_rays_attach_at_presets(planeA_small):
    X = planeA_small
    assert X.bases["r'"] == 0.25 and X.bases["r''"] == -0.25
    assert X.bases["r_3"] == 3.0 and len(X.rays) == 9 + 2
    B = build_space({"type": "plane_with_rays", "preset": "B", "truncation_radius": 10, "pitch": 1.0})
    assert B.bases["r_2"] == 3.0 and B.bases["r_-2"] == -3.0 and B.bases["r_1"] == 1.0


def test_plane_rejects_bad_epsilon():
    with pytest.raises(SpaceError):
        build_space({"type": "plane_with_rays", "preset": "A", "epsilon": 0.7})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_plane_geodesics_are_geodesic(seed):
    X = build_space({"type": "plane_with_rays", "preset": "A", "truncation_radius": 8, "pitch": 0.5},
                    check=False)
    rng = np.random.default_rng(seed)
    a, b = (int(v) for v in rng.integers(0, X.n, 2))
    g = X.geodesic(a, b)
    assert g.points[0] == a and g.points[-1] == b
    assert g.length == pytest.approx(X.dist(a, b), abs=1e-9)
    assert X.point_geodesic_is_valid(g)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 14), st.integers(0, 10**6))
def test_random_graph_metric_axioms(n, seed):
    rng = np.random.default_rng(seed)
    edges = [[i, i + 1, float(rng.integers(1, 4))] for i in range(n - 1)]
    edges += [[int(a), int(b), float(rng.integers(1, 4))]
              for a, b in rng.integers(0, n, (n, 2)) if a != b]
    X = build_space({"type": "graph", "vertices": list(range(n)), "edges": edges})
    D = X.table
    assert np.all(np.diag(D) == 0) and np.array_equal(D, D.T)
    for k in range(n):
        assert np.all(D <= D[:, k:k + 1] + D[k:k + 1, :] + 1e-9)
    a, b = 0, n - 1
    assert X.point_geodesic_is_valid(X.geodesic(a, b))

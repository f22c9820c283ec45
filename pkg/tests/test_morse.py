import numpy as np
import pytest

from morsekit.morse import (GaugeTable, contraction_constant, is_quasi_geodesic, morse_gauge_lower,
                            required_C, slim_constant, stratify)
from morsekit.spaces import Geodesic, build_space, cycle_graph, grid_graph, path_graph


def brute_contraction(space, g):
    """Every open ball B(c, d(c,g)); projection diameter measured along g."""
    D = space.table
    gp = np.asarray(g.points)
    par = np.asarray(g.params)
    dg = D[:, gp]
    near = dg <= dg.min(axis=1, keepdims=True) + 1e-9
    lo = np.where(near, par, np.inf).min(axis=1)
    hi = np.where(near, par, -np.inf).max(axis=1)
    best = 0.0
    for c in range(space.n):
        r = dg[c].min()
        ball = D[c] < r - 1e-9
        if ball.any():
            best = max(best, float(hi[ball].max() - lo[ball].min()))
    return best


def test_geodesics_are_1_0_quasi_geodesic():
    X = build_space(grid_graph(5, 5))
    assert is_quasi_geodesic(X, X.geodesic(0, X.n - 1).points, 1, 0).ok


def test_backtracking_path_on_a_line():
    X = build_space(path_graph(5))
    path = [0, 1, 2, 1, 2, 3]
    assert not is_quasi_geodesic(X, path, 1, 0).ok
    assert is_quasi_geodesic(X, path, 1, 2).ok
    # direct O(L^2) oracle for the smallest C at K = 1
    s = np.arange(len(path), dtype=float)
    d = np.abs(np.subtract.outer(path, path)).astype(float)
    assert required_C(X, path, [1.0])[0] == np.max(np.abs(s[:, None] - s[None, :]) - d)


def test_quasi_geodesic_errors():
    X = build_space(path_graph(3))
    with pytest.raises(ValueError):
        is_quasi_geodesic(X, [], 1, 0)
    with pytest.raises(ValueError):
        is_quasi_geodesic(X, [0, 1], 0.5, 0)


def test_tree_gauge_at_1_0_is_zero(tripod_space):
    a, b = tripod_space.ray("a").top, tripod_space.ray("b").top
    g = tripod_space.geodesic(a, b)
    low = morse_gauge_lower(tripod_space, g, [(1.0, 0.0)], budget=300, seed=1)
    assert low.lower[0] == 0.0


def test_grid_gauge_grows_with_patch():
    vals = []
    for r in (4, 8):
        X = build_space({"type": "cayley", "preset": "Z2", "radius": r})
        a, b = X.labels.index(f"({-r // 2},0)"), X.labels.index(f"({r // 2},0)")
        g = X.geodesic(a, b)
        vals.append(morse_gauge_lower(X, g, [(3.0, 0.0)], budget=400, seed=0).lower[0])
    assert vals[1] > vals[0] > 0


def test_gauge_lower_is_deterministic(z2_ball):
    g = z2_ball.geodesic(0, z2_ball.n - 1)
    a = morse_gauge_lower(z2_ball, g, budget=200, seed=5)
    b = morse_gauge_lower(z2_ball, g, budget=200, seed=5)
    assert np.array_equal(a.lower, b.lower)


def test_gauge_table_conversion_and_within():
    G = GaugeTable.from_contraction(0.5, [(3.0, 0.0), (1.0, 2.0)])
    assert G.n30() == 2 * 0.5 * 9 + 1
    assert G.value(1.0, 2.0) == 2 * 0.5 + 2 + 1
    low = GaugeTable([(3.0, 0.0)], [G.n30() + 1])
    assert not low.within(G)
    assert GaugeTable([(3.0, 0.0)], [G.n30()]).within(G)
    assert GaugeTable.constant(4.0, [(1.0, 0.0)]).certified == "assumed"


@pytest.mark.parametrize("desc", [cycle_graph(9), grid_graph(5, 4), path_graph(6)])
def test_contraction_matches_brute_force(desc):
    X = build_space(desc)
    g = X.geodesic(0, X.n - 1)
    assert contraction_constant(X, g).constant == brute_contraction(X, g)


def test_tree_contraction_is_zero(tripod_space):
    g = tripod_space.ray_geodesic("a", "b")
    assert contraction_constant(tripod_space, g).constant == 0.0


def test_plane_contraction_values(planeA_small):
    X = planeA_small
    c = lambda p, q: contraction_constant(X, X.ray_geodesic(p, q)).constant  # noqa: E731
    assert c("r_2", "r_3") == pytest.approx(1.0, rel=0.15)
    assert c("r_-4", "r_3") <= 9 * 1.15
    assert c("r'", "r''") == pytest.approx(0.5, rel=0.15)


def test_contraction_empty_report():
    X = build_space(path_graph(2))
    g = X.geodesic(0, 1)
    rep = contraction_constant(X, g)
    assert rep.empty and rep.constant == 0.0


def test_slim_constant_tree_and_c4():
    T = build_space({"type": "graph", "edges": [[0, 1], [0, 2], [0, 3]]})
    sides = [T.geodesic(1, 2), T.geodesic(2, 3), T.geodesic(3, 1)]
    assert slim_constant(T, sides) == 0.0
    C4 = build_space(cycle_graph(4))
    s1 = C4.geodesic(0, 1)
    s2 = C4.geodesic(1, 2)
    s3 = Geodesic(np.array([2, 3, 0]), np.array([0.0, 1.0, 2.0]), (2, 0))
    D = C4.table
    # brute: each side point to the union of the other two
    expected = max(min(D[p, q] for s in others for q in s.points)
                   for side, others in ((s1, (s2, s3)), (s2, (s1, s3)), (s3, (s1, s2)))
                   for p in side.points)
    assert slim_constant(C4, [s1, s2, s3]) == expected
    with pytest.raises(ValueError):
        slim_constant(C4, [s1, s1])


def test_stratify_zero_gauge_on_c4():
    X = build_space(cycle_graph(4))
    res = stratify(X, 0, GaugeTable.constant(0.0, [(1.0, 0.0)]), search_budget=50)
    # vertex 2 is joined to 0 by two geodesics, one of which strays
    assert sorted(res.members) == [0, 1, 3]
    assert 2 not in res

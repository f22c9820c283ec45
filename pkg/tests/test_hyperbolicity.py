import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morsekit.hyperbolicity import (VisualMetricParams, b_equivalence, choose_epsilon, four_point_delta,
                                    four_point_value, gromov_product, products_table, sandwich_violation,
                                    visual_metric, MetricTable)
from morsekit.spaces import build_space, cycle_graph, grid_graph, path_graph, tripod


def naive_delta(D):
    """Direct definition over ordered quadruples."""
    n = len(D)
    best = 0.0
    for w, x, y, z in itertools.product(range(n), repeat=4):
        gp = lambda a, b: 0.5 * (D[w, a] + D[w, b] - D[a, b])  # noqa: E731
        best = max(best, min(gp(x, z), gp(z, y)) - gp(x, y))
    return best


def random_graph(n, seed):
    rng = np.random.default_rng(seed)
    edges = [[i, int(rng.integers(0, i)), 1.0] for i in range(1, n)]
    edges += [[int(a), int(b), 1.0] for a, b in rng.integers(0, n, (n // 2, 2)) if a != b]
    return build_space({"type": "graph", "vertices": list(range(n)), "edges": edges})


def random_tree(n, seed):
    rng = np.random.default_rng(seed)
    edges = [[i, int(rng.integers(0, i)), float(rng.integers(1, 5))] for i in range(1, n)]
    return build_space({"type": "graph", "vertices": list(range(n)), "edges": edges})


@pytest.mark.parametrize("seed", range(6))
def test_delta_matches_naive_on_random_graphs(seed):
    X = random_graph(9, seed)
    assert four_point_delta(X).delta == naive_delta(X.table)


def test_delta_known_values():
    assert four_point_delta(build_space(cycle_graph(4))).delta == 1.0
    assert four_point_delta(build_space(path_graph(12))).delta == 0.0
    # square grid: delta equals the half-perimeter defect of the largest square
    G = build_space(grid_graph(4, 4))
    assert four_point_delta(G).delta == naive_delta(G.table)


def test_delta_witness_realises_value():
    X = random_graph(20, 11)
    res = four_point_delta(X)
    assert res.witness is not None
    assert four_point_value(X.table, *res.witness) == pytest.approx(res.delta)


def test_delta_degenerate_and_subset():
    X = build_space(cycle_graph(8))
    assert four_point_delta(X, [0, 1, 2]).degenerate
    sub = [0, 2, 4, 6]
    res = four_point_delta(X, sub)
    assert res.delta == naive_delta(X.table[np.ix_(sub, sub)])
    assert set(res.witness) <= set(sub)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 30), st.integers(0, 10**6))
def test_trees_are_zero_hyperbolic(n, seed):
    assert four_point_delta(random_tree(n, seed)).delta == 0.0


def test_gromov_product_table():
    X = build_space(tripod(4))
    a, b, c = (X.ray(l).top for l in "abc")
    P = products_table(X, a, [b, c])
    assert P[0, 1] == gromov_product(X, b, c, a) == 4.0


def test_tripod_visual_metric_value():
    # from the tip of leg a, the other two tips branch at distance 4
    X = build_space(tripod(4))
    a, b, c = (X.ray(l).top for l in "abc")
    P = products_table(X, a, [b, c])
    m = visual_metric(P, VisualMetricParams(a, 1.0, 0.0))
    assert m.values[0, 1] == pytest.approx(math.exp(-4))


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 25), st.integers(0, 10**6))
def test_tree_sandwich_is_tight(n, seed):
    X = random_tree(n, seed)
    P = products_table(X, 0)
    params = VisualMetricParams(0, 0.7, 0.0)
    m = visual_metric(P, params)
    expected = np.exp(-0.7 * P)
    np.fill_diagonal(expected, 0.0)
    assert np.array_equal(m.values, expected)


@settings(max_examples=15, deadline=None)
@given(st.integers(6, 25), st.integers(0, 10**6))
def test_sandwich_holds_on_graphs(n, seed):
    X = random_graph(n, seed)
    delta = four_point_delta(X).delta
    params = VisualMetricParams(0, choose_epsilon(delta), delta)
    assert params.admissible
    P = products_table(X, 0)
    assert sandwich_violation(P, visual_metric(P, params), params) <= 1e-9


def test_visual_metric_is_a_metric_and_underflow_flags():
    X = random_graph(15, 2)
    P = products_table(X, 0)
    m = visual_metric(P, VisualMetricParams(0, 0.5, 1.0)).values
    assert np.all(np.diag(m) == 0) and np.allclose(m, m.T)
    for k in range(len(m)):
        assert np.all(m <= m[:, k:k + 1] + m[k:k + 1, :] + 1e-12)
    huge = np.array([[np.inf, 2e4], [2e4, np.inf]])
    assert visual_metric(huge, VisualMetricParams(0, 1.0)).flagged == [(0, 1)]


def test_choose_epsilon():
    assert choose_epsilon(0.0) == 1.0
    eps = choose_epsilon(3.0)
    assert math.exp(2 * 3.0 * eps) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        choose_epsilon(-1)


def test_b_equivalence():
    rng = np.random.default_rng(0)
    v = rng.uniform(0.1, 1, (6, 6))
    v = v + v.T
    np.fill_diagonal(v, 0)
    a = MetricTable(list(range(6)), v)
    assert b_equivalence(a, 1.0, a, 1.0).k == pytest.approx(1.0)
    b = MetricTable(list(range(6)), 3 * v)
    assert b_equivalence(a, 1.0, b, 1.0).k == pytest.approx(3.0)

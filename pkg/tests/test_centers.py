import numpy as np
import pytest

from morsekit.centers import center_set, center_stability, coarse_center, triangle_distances
from morsekit.spaces import build_space


def brute_kstar(space, a, b, c):
    """min over points of the largest distance to the three (lexicographic) sides."""
    D = space.table if space.n <= 3000 else None
    worst = np.zeros(space.n)
    for p, q in ((a, b), (b, c), (a, c)):
        pts = space.ray_geodesic(p, q).points
        d = (D[:, pts] if D is not None else space.dist_block(np.arange(space.n), pts)).min(axis=1)
        worst = np.maximum(worst, d)
    return float(worst.min())


def test_tripod_center_is_the_median(tripod_space):
    x, K = coarse_center(tripod_space, "a", "b", "c")
    assert x == 0 and K == 1.0


def test_plane_center_of_small_triangle(planeA_small):
    X = planeA_small
    x, K = coarse_center(X, "r_0", "r'", "r''")
    assert (X.px[x], X.py[x], X.rid[x]) == (0.0, 0.0, -1) and K == 1.0


def test_consecutive_triangle_center_sits_at_middle_base(planeA_small):
    X = planeA_small
    x, _ = coarse_center(X, "r_0", "r_1", "r_2")
    assert X.px[x] == 1.0 and X.py[x] == 0.0


@pytest.mark.parametrize("triple", [("r_-2", "r_1", "r_3"), ("r_0", "r'", "r_4")])
def test_kstar_matches_brute_force(planeA_small, triple):
    _, K = coarse_center(planeA_small, *triple, rep_budget=1)
    assert K - 1 == pytest.approx(brute_kstar(planeA_small, *triple), abs=1e-9)


def test_center_sets_are_nested(planeA_small):
    sets = [center_set(planeA_small, "r_0", "r'", "r''", k) for k in (0.0, 1.0, 2.0)]
    assert len(sets[0]) <= len(sets[1]) <= len(sets[2])
    assert set(sets[0].points) <= set(sets[1].points) <= set(sets[2].points)
    assert sets[1].diameter <= sets[2].diameter


def test_triangle_needs_distinct_vertices(planeA_small):
    with pytest.raises(ValueError):
        triangle_distances(planeA_small, "r_0", "r_0", "r_1")


def test_center_stability(planeA_small, planeA_stratum):
    same = center_stability(planeA_small, planeA_stratum, ("r_0", "r_1", "r_2"), ("r_0", "r_1", "r_2"))
    assert same.displacement == 0.0 and same.hausdorff == 0.0 and same.vertex_distance == 0.0
    moved = center_stability(planeA_small, planeA_stratum, ("r_0", "r_1", "r_2"), ("r_0", "r_2", "r_4"),
                             lam=1e-6)
    assert moved.flagged and moved.displacement == 1.0


def test_cayley_center():
    X = build_space({"type": "cayley", "preset": "F2", "radius": 3})
    x, K = coarse_center(X, "r_a", "r_b", "r_A")
    assert X.labels[x] == "e" and K == 1.0

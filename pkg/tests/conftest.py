import numpy as np
import pytest

from morsekit.boundary import boundary_stratum
from morsekit.morse import GaugeTable
from morsekit.spaces import build_space, tripod

ACCEPTANCE_LINES: dict = {}


def plane_origin(space) -> int:
    hit = np.nonzero((space.rid < 0) & (np.abs(space.px) < 1e-9) & (np.abs(space.py) < 1e-9))[0]
    return int(hit[0])


@pytest.fixture(scope="session")
def planeA_small():
    """Preset A, truncation 20, rays |m| <= 4."""
    return build_space({"type": "plane_with_rays", "preset": "A", "truncation_radius": 20,
                        "ray_index_max": 4})


@pytest.fixture(scope="session")
def planeA_stratum(planeA_small):
    return boundary_stratum(planeA_small, plane_origin(planeA_small), GaugeTable.from_contraction(2.0),
                            budget=50)


@pytest.fixture(scope="session")
def tripod_space():
    return build_space(tripod(6))


@pytest.fixture(scope="session")
def f2_ball():
    return build_space({"type": "cayley", "preset": "F2", "radius": 4})


@pytest.fixture(scope="session")
def z2_ball():
    return build_space({"type": "cayley", "preset": "Z2", "radius": 4})


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

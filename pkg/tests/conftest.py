import numpy as np
import pytest

from r3d.env import CityGenParams, OccupancyGrid, generate_city
from r3d.grid import GridDims
from r3d.propagate2d import BaseMap3D
from r3d.synthesis import RadioMap3D

# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance gate")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def dims8() -> GridDims:
    return GridDims(16, 16, 8)


@pytest.fixture
def empty_env(dims8) -> OccupancyGrid:
    return OccupancyGrid(dims8, np.zeros(dims8.shape, dtype=np.uint8))


@pytest.fixture
def city_env() -> OccupancyGrid:
    dims = GridDims(32, 32, 8)
    return generate_city(dims, CityGenParams(8, 3, (2, 6), 0.7), seed=11)


@pytest.fixture
def flat_base(dims8) -> BaseMap3D:
    """Constant base prediction; keeps the e-term easy to reason about."""
    return BaseMap3D(dims8, np.full(dims8.shape, -55.0))


def normalized_map(dims: GridDims, seed: int) -> RadioMap3D:
    rng = np.random.default_rng(seed)
    return RadioMap3D(dims, rng.random(dims.shape), "normalized")

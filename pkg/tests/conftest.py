import pytest

from gridbench.grids import OccupancyGrid
from gridbench.world import SceneGenConfig, generate_scene

RES = 0.25


def grid_from_rows(rows, resolution=RES):
    return OccupancyGrid.decode_rows(rows, resolution)


@pytest.fixture(scope="session")
def default_scene():
    """One 48x48 generated scene shared by read-only tests."""
    return generate_scene(SceneGenConfig(), 0)


@pytest.fixture(scope="session")
def small_scene():
    """A compact scene for fast episode-level tests."""
    gen = SceneGenConfig(width=32, height=32, min_rooms=2, max_rooms=3,
                        n_objects=8)
    return generate_scene(gen, 2)


@pytest.fixture
def open_grid():
    """7x7 free interior with a wall ring."""
    rows = [
        "OOOOOOO",
        "OFFFFFO",
        "OFFFFFO",
        "OFFFFFO",
        "OFFFFFO",
        "OFFFFFO",
        "OOOOOOO",
    ]
    return grid_from_rows(rows)

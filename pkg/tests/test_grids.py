import numpy as np
import pytest

from gridbench.grids import FREE, OBSTACLE, UNKNOWN, GridError, OccupancyGrid


def test_new_grid_starts_unknown():
    g = OccupancyGrid(4, 3, 0.25)
    assert g.cells.shape == (3, 4)
    assert g.count(UNKNOWN) == 12
    assert g.count(FREE) == 0


def test_state_roundtrip_and_xy_addressing():
    g = OccupancyGrid(4, 3, 0.25)
    g.set_state((3, 1), FREE)
    assert g.state((3, 1)) == FREE
    # storage is cells[y, x]
    assert g.cells[1, 3] == FREE
    assert g.count(FREE) == 1


def test_in_bounds():
    g = OccupancyGrid(4, 3, 0.25)
    assert g.in_bounds((0, 0)) and g.in_bounds((3, 2))
    assert not g.in_bounds((4, 0))
    assert not g.in_bounds((0, 3))
    assert not g.in_bounds((-1, 0))


def test_is_free_out_of_bounds_is_false():
    g = OccupancyGrid(2, 2, 0.25)
    g.set_state((0, 0), FREE)
    assert g.is_free((0, 0))
    assert not g.is_free((5, 5))


def test_cell_center_and_cell_of_invert():
    g = OccupancyGrid(8, 8, 0.25)
    assert g.cell_center((0, 0)) == (0.125, 0.125)
    assert g.cell_center((3, 5)) == (0.875, 1.375)
    for cell in [(0, 0), (3, 5), (7, 7)]:
        assert g.cell_of(*g.cell_center(cell)) == cell


def test_encode_decode_roundtrip():
    g = OccupancyGrid(3, 2, 0.5)
    g.set_state((0, 0), FREE)
    g.set_state((1, 0), OBSTACLE)
    assert g.encode_rows() == ["FOU", "UUU"]
    g2 = OccupancyGrid.decode_rows(g.encode_rows(), 0.5)
    assert g2 == g


def test_decode_rejects_bad_input():
    with pytest.raises(GridError):
        OccupancyGrid.decode_rows([], 0.25)
    with pytest.raises(GridError):
        OccupancyGrid.decode_rows(["FF", "F"], 0.25)
    with pytest.raises(GridError):
        OccupancyGrid.decode_rows(["FX"], 0.25)


def test_constructor_validation():
    with pytest.raises(GridError):
        OccupancyGrid(2, 2, 0.0)
    with pytest.raises(GridError):
        OccupancyGrid(2, 2, 0.25, np.zeros((3, 3), dtype=np.uint8))


def test_copy_is_independent():
    g = OccupancyGrid(2, 2, 0.25)
    g2 = g.copy()
    g2.set_state((0, 0), FREE)
    assert g.state((0, 0)) == UNKNOWN


def test_count_matches_numpy():
    g = OccupancyGrid(5, 5, 0.25)
    g.cells[:2, :] = FREE
    g.cells[2, :3] = OBSTACLE
    assert g.count(FREE) == 10
    assert g.count(OBSTACLE) == 3
    assert g.count(UNKNOWN) == 12

"""Tri-state occupancy grids shared by ground truth and belief maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FREE = 0
OBSTACLE = 1
UNKNOWN = 2

_STATE_CHARS = {FREE: "F", OBSTACLE: "O", UNKNOWN: "U"}
_CHAR_STATES = {v: k for k, v in _STATE_CHARS.items()}


class GridError(ValueError):
    pass


@dataclass
class OccupancyGrid:
    """Dense 2D grid of {free, obstacle, unknown} cells.

    Cells are addressed as (x, y) tuples; storage is row-major with
    ``cells[y, x]``. ``resolution`` is meters per cell.
    """

    width: int
    height: int
    resolution: float
    cells: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.resolution <= 0:
            raise GridError("resolution must be positive")
        if self.cells is None:
            self.cells = np.full((self.height, self.width), UNKNOWN, dtype=np.uint8)
        else:
            self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise GridError(
                f"cell array shape {self.cells.shape} does not match "
                f"{self.height}x{self.width}"
            )

    def in_bounds(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def state(self, cell) -> int:
        x, y = cell
        return int(self.cells[y, x])

    def set_state(self, cell, state: int) -> None:
        x, y = cell
        self.cells[y, x] = state

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and self.state(cell) == FREE

    def count(self, state: int) -> int:
        return int(np.count_nonzero(self.cells == state))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.width, self.height, self.resolution, self.cells.copy())

    def cell_center(self, cell) -> tuple[float, float]:
        """Continuous (x, y) in meters at the center of a cell."""
        x, y = cell
        return ((x + 0.5) * self.resolution, (y + 0.5) * self.resolution)

    def cell_of(self, x_m: float, y_m: float) -> tuple[int, int]:
        """Grid cell containing a continuous position in meters."""
        return (int(x_m / self.resolution), int(y_m / self.resolution))

    def encode_rows(self) -> list[str]:
        return ["".join(_STATE_CHARS[int(v)] for v in row) for row in self.cells]

    @classmethod
    def decode_rows(cls, rows: list[str], resolution: float) -> "OccupancyGrid":
        if not rows:
            raise GridError("empty cell encoding")
        width = len(rows[0])
        cells = np.empty((len(rows), width), dtype=np.uint8)
        for y, row in enumerate(rows):
            if len(row) != width:
                raise GridError(f"row {y} has length {len(row)}, expected {width}")
            for x, ch in enumerate(row):
                if ch not in _CHAR_STATES:
                    raise GridError(f"bad cell character {ch!r} at row {y}, col {x}")
                cells[y, x] = _CHAR_STATES[ch]
        return cls(width=width, height=len(rows), resolution=resolution, cells=cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and np.array_equal(self.cells, other.cells)
        )

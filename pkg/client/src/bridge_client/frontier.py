"""Self-contained frontier exploration over a belief grid.

This module deliberately re-implements the navigation math from scratch so
the client stays independent of the simulator package: an occupancy belief
built from observed cells, frontier-cluster goal selection, a first-order
upwind fast-marching distance field, and strict-descent stepping. The
numerical conventions (costs, tie-breaks, corner rule) match the harness's
published behavior so that cross-validation runs agree exactly.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy import ndimage

FREE = 0
OBSTACLE = 1
UNKNOWN = 2

TURN_INCREMENT = math.pi / 4
INF = float("inf")

_DIRS8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))

MOVE_FORWARD = "move_forward"
TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
STOP = "stop"
BLOCKED = "blocked"


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0:
        a += 2.0 * math.pi
    return a - math.pi


def traversable_mask(cells: np.ndarray, inflation_radius: int) -> np.ndarray:
    """Plannable cells: obstacles inflated by the agent radius; unknown cells
    count as traversable (optimistic exploration planning)."""
    obstacle = cells == OBSTACLE
    if inflation_radius > 0:
        obstacle = ndimage.binary_dilation(
            obstacle, structure=np.ones((3, 3), bool),
            iterations=inflation_radius)
    return ~obstacle


def nearest_traversable(mask: np.ndarray, goal: tuple) -> tuple:
    gx, gy = goal
    if mask[gy, gx]:
        return goal
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise RuntimeError("no traversable cells")
    d2 = (xs - gx) ** 2 + (ys - gy) ** 2
    order = np.lexsort((xs, ys, d2))
    i = order[0]
    return (int(xs[i]), int(ys[i]))


def fmm_field(cells: np.ndarray, goal: tuple, resolution: float,
              inflation_radius: int) -> np.ndarray:
    """First-order upwind fast-marching distance field (meters) from goal."""
    mask = traversable_mask(cells, inflation_radius)
    gx, gy = goal
    if not mask[gy, gx]:
        raise RuntimeError(f"goal {goal} not traversable")
    h = resolution
    height, width = mask.shape
    T = np.full((height, width), INF)
    accepted = np.zeros((height, width), bool)
    T[gy, gx] = 0.0
    heap = [(0.0, gx, gy)]
    while heap:
        _t, x, y = heapq.heappop(heap)
        if accepted[y, x]:
            continue
        accepted[y, x] = True
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if not (0 <= nx < width and 0 <= ny < height) \
                    or not mask[ny, nx] or accepted[ny, nx]:
                continue
            a = INF
            if nx > 0 and accepted[ny, nx - 1]:
                a = T[ny, nx - 1]
            if nx < width - 1 and accepted[ny, nx + 1]:
                a = min(a, T[ny, nx + 1])
            b = INF
            if ny > 0 and accepted[ny - 1, nx]:
                b = T[ny - 1, nx]
            if ny < height - 1 and accepted[ny + 1, nx]:
                b = min(b, T[ny + 1, nx])
            if a > b:
                a, b = b, a
            if b - a < h:
                cand = 0.5 * (a + b + math.sqrt(2.0 * h * h - (b - a) ** 2))
            else:
                cand = a + h
            if cand < T[ny, nx]:
                T[ny, nx] = cand
                heapq.heappush(heap, (cand, nx, ny))
    return T


def descend_field(field: np.ndarray, cell: tuple, mask: np.ndarray):
    """Best allowed neighbor strictly downhill; diagonals forbidden when both
    orthogonal neighbors are blocked. None at the source / on a plateau."""
    x, y = cell
    height, width = field.shape
    cur = field[y, x]
    best, best_v = None, cur
    for dx, dy in _DIRS8:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height) or not mask[ny, nx]:
            continue
        if dx != 0 and dy != 0 and not (mask[y, nx] or mask[ny, x]):
            continue
        v = field[ny, nx]
        if v < best_v or (v == best_v and best is not None
                          and (ny, nx) < (best[1], best[0])):
            best, best_v = (nx, ny), v
    return best


def select_frontier(cells: np.ndarray, resolution: float, pose_xy: tuple,
                    min_cluster_size: int, exclude=()):
    """Frontier-cluster goal: free cells bordering unknown space, clustered
    8-connected, scored distance / size; returns the winning cluster's
    centroid-nearest cell or None when exploration is complete."""
    free = cells == FREE
    unknown = cells == UNKNOWN
    near_unknown = ndimage.binary_dilation(unknown, structure=np.ones((3, 3), bool))
    frontier = free & near_unknown
    if not frontier.any():
        return None
    labels, n = ndimage.label(frontier, structure=np.ones((3, 3), int))
    px, py = pose_xy
    best = None
    for lbl in range(1, n + 1):
        ys, xs = np.nonzero(labels == lbl)
        size = xs.size
        if size < min_cluster_size:
            continue
        cx = (xs.mean() + 0.5) * resolution
        cy = (ys.mean() + 0.5) * resolution
        dist = math.hypot(cx - px, cy - py)
        score = dist / size
        if best is None or score < best[0]:
            d2 = (xs - xs.mean()) ** 2 + (ys - ys.mean()) ** 2
            order = np.lexsort((xs, ys, d2))
            i = order[0]
            cell = (int(xs[i]), int(ys[i]))
            if cell in exclude:
                continue
            best = (score, lbl, cell)
    if best is None:
        return None
    return best[2]


class FrontierExplorer:
    """Stateful frontier-exploration policy over bridge observations.

    Feed it the reset message once and each decide message's observation;
    it maintains its own belief grid and returns one primitive action kind
    per tick.
    """

    def __init__(self, width: int, height: int, resolution: float,
                 inflation_radius: int = 1, min_frontier_size: int = 1):
        self.resolution = resolution
        self.inflation_radius = inflation_radius
        self.min_frontier_size = min_frontier_size
        self.cells = np.full((height, width), UNKNOWN, dtype=np.uint8)
        self.goal = None
        self.field = None
        self.mask = None
        self.frontier_cell = None
        self.blacklist = set()

    @classmethod
    def from_reset(cls, msg: dict) -> "FrontierExplorer":
        scene = msg.get("scene", {})
        params = msg.get("params", {})
        return cls(width=int(scene["width"]), height=int(scene["height"]),
                   resolution=float(scene["resolution"]),
                   inflation_radius=int(params.get("inflation_radius", 1)),
                   min_frontier_size=int(params.get("min_frontier_size", 1)))

    def integrate(self, visible_cells) -> None:
        for x, y, state in visible_cells:
            self.cells[int(y), int(x)] = FREE if state == "F" else OBSTACLE

    def _replan(self, pose_xy) -> bool:
        frontier = select_frontier(self.cells, self.resolution, pose_xy,
                                   self.min_frontier_size,
                                   exclude=self.blacklist)
        if frontier is None:
            return False
        self.frontier_cell = frontier
        mask = traversable_mask(self.cells, self.inflation_radius)
        goal = nearest_traversable(mask, frontier)
        field = fmm_field(self.cells, goal, self.resolution,
                          self.inflation_radius)
        cur = (int(pose_xy[0] / self.resolution),
               int(pose_xy[1] / self.resolution))
        if not np.isfinite(field[cur[1], cur[0]]):
            # inflation walled the agent in; fall back to the bare grid
            mask = traversable_mask(self.cells, 0)
            goal = nearest_traversable(mask, frontier)
            field = fmm_field(self.cells, goal, self.resolution, 0)
        self.goal, self.field, self.mask = goal, field, mask
        return True

    def _frontierish(self, goal) -> bool:
        gx, gy = goal
        h, w = self.cells.shape
        for dy in (-2, -1, 0, 1, 2):
            for dx in (-2, -1, 0, 1, 2):
                x, y = gx + dx, gy + dy
                if 0 <= x < w and 0 <= y < h and self.cells[y, x] == UNKNOWN:
                    return True
        return False

    def decide(self, observation: dict) -> str:
        """One action kind for one decide message's observation payload."""
        self.integrate(observation.get("visible_cells", []))
        x, y, heading = observation["pose"]
        cur = (int(x / self.resolution), int(y / self.resolution))
        last_outcome = observation.get("last_outcome")
        need_replan = (
            self.goal is None
            or cur == self.goal
            or last_outcome == BLOCKED
            or not self._frontierish(self.goal)
            or not np.isfinite(self.field[cur[1], cur[0]])
        )
        if need_replan and not self._replan((x, y)):
            return STOP
        nxt = descend_field(self.field, cur, self.mask)
        for _ in range(8):
            if nxt is not None:
                break
            self.blacklist.add(self.frontier_cell)
            if not self._replan((x, y)):
                return STOP
            nxt = descend_field(self.field, cur, self.mask)
        if nxt is None:
            return STOP
        desired = math.atan2(nxt[1] - cur[1], nxt[0] - cur[0])
        delta = wrap_angle(desired - heading)
        k = round(delta / TURN_INCREMENT)
        if k == 0:
            return MOVE_FORWARD
        return TURN_LEFT if k > 0 else TURN_RIGHT

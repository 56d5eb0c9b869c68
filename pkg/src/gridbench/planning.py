"""Navigation stack: D* Lite planner, FMM distance field, frontier selection."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from gridbench.grids import FREE, OBSTACLE, UNKNOWN, OccupancyGrid

INF = float("inf")
COST_STRAIGHT = 10  # integer edge costs; 14/10 approximates sqrt(2)
COST_DIAGONAL = 14
SQRT2 = math.sqrt(2.0)

UNKNOWN_BLOCKED = "blocked"
UNKNOWN_TRAVERSABLE = "traversable"

DEFAULT_INFLATION_RADIUS = 1
DEFAULT_MIN_FRONTIER_SIZE = 1

_DIRS8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class PlanningError(RuntimeError):
    pass


class NoPathError(PlanningError):
    def __init__(self, msg, explored=None):
        super().__init__(msg)
        self.explored = explored or set()


@dataclass(frozen=True)
class PlanQuery:
    grid: OccupancyGrid
    start: tuple
    goal: tuple
    unknown_is: str = UNKNOWN_BLOCKED
    inflation_radius: int = DEFAULT_INFLATION_RADIUS


@dataclass
class Path:
    cells: list
    length_m: float


@dataclass
class DistanceField:
    values: np.ndarray  # meters; inf where unreachable
    source: tuple
    resolution: float


def traversable_mask(grid: OccupancyGrid, unknown_is: str = UNKNOWN_BLOCKED,
                     inflation_radius: int = DEFAULT_INFLATION_RADIUS) -> np.ndarray:
    """Bool mask of plannable cells: obstacles inflated by the agent radius,
    unknown cells handled per policy (never inflated)."""
    obstacle = grid.cells == OBSTACLE
    if inflation_radius > 0:
        obstacle = ndimage.binary_dilation(
            obstacle, structure=np.ones((3, 3), bool), iterations=inflation_radius
        )
    mask = ~obstacle
    if unknown_is == UNKNOWN_BLOCKED:
        mask &= grid.cells != UNKNOWN
    elif unknown_is != UNKNOWN_TRAVERSABLE:
        raise ValueError(f"bad unknown policy {unknown_is!r}")
    return mask


def path_length_m(cells, resolution: float) -> float:
    total = 0.0
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        total += SQRT2 if (x0 != x1 and y0 != y1) else 1.0
    return total * resolution


def nearest_free_goal(grid: OccupancyGrid, goal: tuple) -> tuple:
    """The goal itself when free, else the free cell nearest in Euclidean
    distance (ties broken row-major)."""
    if grid.is_free(goal):
        return goal
    ys, xs = np.nonzero(grid.cells == FREE)
    if xs.size == 0:
        raise PlanningError("grid has no free cells")
    gx, gy = goal
    d2 = (xs - gx) ** 2 + (ys - gy) ** 2
    order = np.lexsort((xs, ys, d2))
    i = order[0]
    return (int(xs[i]), int(ys[i]))


def nearest_traversable(mask: np.ndarray, goal: tuple) -> tuple:
    gx, gy = goal
    if mask[gy, gx]:
        return goal
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise PlanningError("no traversable cells")
    d2 = (xs - gx) ** 2 + (ys - gy) ** 2
    order = np.lexsort((xs, ys, d2))
    i = order[0]
    return (int(xs[i]), int(ys[i]))


class DStarLite:
    """Incremental shortest-path search on a grid traversability mask.

    8-connected, integer costs 10/14, diagonal moves forbidden when both
    orthogonal neighbors are blocked (no corner cutting). The start is fixed
    per instance; cell flips are folded in via `update_cells` and the next
    `compute` reuses prior search state.
    """

    def __init__(self, mask: np.ndarray, start: tuple, goal: tuple):
        self.h_, self.w_ = mask.shape
        self.mask = [bool(v) for v in mask.ravel()]
        self.start = start[1] * self.w_ + start[0]
        self.goal = goal[1] * self.w_ + goal[0]
        n = self.w_ * self.h_
        self.g = [INF] * n
        self.rhs = [INF] * n
        self.rhs[self.goal] = 0
        self.open: list = []
        self.in_open = [False] * n
        heapq.heappush(self.open, (*self._key(self.goal), self.goal))
        self.in_open[self.goal] = True

    def _heuristic(self, idx: int) -> int:
        dx = abs(idx % self.w_ - self.start % self.w_)
        dy = abs(idx // self.w_ - self.start // self.w_)
        lo, hi = (dx, dy) if dx < dy else (dy, dx)
        return COST_DIAGONAL * lo + COST_STRAIGHT * (hi - lo)

    def _key(self, idx: int):
        m = min(self.g[idx], self.rhs[idx])
        if m == INF:
            return (INF, INF)
        return (m + self._heuristic(idx), m)

    def _neighbors(self, idx: int):
        w = self.w_
        x, y = idx % w, idx // w
        mask = self.mask
        out = []
        for dx, dy in _DIRS8:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < self.h_):
                continue
            nidx = ny * w + nx
            if not mask[nidx]:
                continue
            if dx != 0 and dy != 0:
                if not (mask[y * w + nx] or mask[ny * w + x]):
                    continue
                out.append((nidx, COST_DIAGONAL))
            else:
                out.append((nidx, COST_STRAIGHT))
        return out

    def _update_vertex(self, idx: int) -> None:
        if idx != self.goal:
            if self.mask[idx]:
                best = INF
                for nidx, c in self._neighbors(idx):
                    v = self.g[nidx]
                    if v + c < best:
                        best = v + c
                self.rhs[idx] = best
            else:
                self.rhs[idx] = INF
        if self.g[idx] != self.rhs[idx]:
            heapq.heappush(self.open, (*self._key(idx), idx))
            self.in_open[idx] = True

    def compute(self):
        """Run the search until the start is consistent. Returns the integer
        path cost from start to goal, or None when unreachable."""
        start = self.start
        g, rhs = self.g, self.rhs
        while self.open:
            k1, k2, u = self.open[0]
            sk = self._key(start)
            if not ((k1, k2) < sk or rhs[start] != g[start]):
                break
            heapq.heappop(self.open)
            nk = self._key(u)
            if (k1, k2) < nk:
                heapq.heappush(self.open, (*nk, u))
                continue
            if g[u] > rhs[u]:
                g[u] = rhs[u]
                for nidx, _c in self._neighbors(u):
                    self._update_vertex(nidx)
            elif g[u] < rhs[u]:
                g[u] = INF
                self._update_vertex(u)
                for nidx, _c in self._neighbors(u):
                    self._update_vertex(nidx)
            else:
                continue
        if not self.mask[start] or rhs[start] == INF:
            return None
        return int(rhs[start])

    def update_cells(self, changes) -> None:
        """Apply (cell, traversable) flips; affected vertices re-enter the queue."""
        w = self.w_
        patch = set()
        for (x, y), traversable in changes:
            idx = y * w + x
            self.mask[idx] = bool(traversable)
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < w and 0 <= ny < self.h_:
                        patch.add(ny * w + nx)
        for idx in patch:
            if not self.mask[idx] and idx != self.goal:
                self.g[idx] = INF
                self.rhs[idx] = INF
            self._update_vertex(idx)

    def extract_path(self):
        """Greedy descent over g from start to goal; call after compute()."""
        if self.compute() is None:
            return None
        w = self.w_
        path = [self.start]
        cur = self.start
        seen = {cur}
        while cur != self.goal:
            best, best_v = None, INF
            for nidx, c in self._neighbors(cur):
                v = self.g[nidx]
                if v == INF:
                    continue
                cand = v + c
                if cand < best_v or (cand == best_v and (best is None or nidx < best)):
                    best, best_v = nidx, cand
            if best is None or best in seen:
                return None
            path.append(best)
            seen.add(best)
            cur = best
        return [(idx % w, idx // w) for idx in path]

    def explored_cells(self):
        w = self.w_
        return {(i % w, i // w) for i, v in enumerate(self.g) if v != INF}


def dstar_lite_plan(q: PlanQuery) -> Path:
    """Shortest path on the (inflated) grid; goals inside obstacle areas fall
    back to the nearest plannable cell."""
    mask = traversable_mask(q.grid, q.unknown_is, q.inflation_radius)
    sx, sy = q.start
    if not mask[sy, sx]:
        raise PlanningError(f"start {q.start} is not traversable")
    goal = nearest_traversable(mask, q.goal)
    planner = DStarLite(mask, q.start, goal)
    if planner.compute() is None:
        raise NoPathError(f"goal {goal} unreachable from {q.start}",
                          explored=planner.explored_cells())
    cells = planner.extract_path()
    if cells is None:
        raise NoPathError(f"goal {goal} unreachable from {q.start}",
                          explored=planner.explored_cells())
    return Path(cells=cells, length_m=path_length_m(cells, q.grid.resolution))


def fmm_field(grid: OccupancyGrid, goal: tuple, unknown_is: str = UNKNOWN_TRAVERSABLE,
              inflation_radius: int = 0) -> DistanceField:
    """First-order upwind fast-marching distance field from the goal.

    Unit speed; values in meters; blocked/unreachable cells hold inf.
    """
    mask = traversable_mask(grid, unknown_is, inflation_radius)
    gx, gy = goal
    if not mask[gy, gx]:
        raise PlanningError(f"goal {goal} not traversable under policy {unknown_is}")
    h = grid.resolution
    height, width = mask.shape
    T = np.full((height, width), INF)
    accepted = np.zeros((height, width), bool)
    T[gy, gx] = 0.0
    heap = [(0.0, gx, gy)]
    while heap:
        t, x, y = heapq.heappop(heap)
        if accepted[y, x]:
            continue
        accepted[y, x] = True
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if not (0 <= nx < width and 0 <= ny < height) or not mask[ny, nx] or accepted[ny, nx]:
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
    return DistanceField(values=T, source=goal, resolution=grid.resolution)


def descend_field(field: DistanceField, cell: tuple, mask: np.ndarray):
    """Best allowed neighbor strictly downhill in the field, or None at the
    source / on a plateau."""
    x, y = cell
    height, width = field.values.shape
    cur = field.values[y, x]
    best, best_v = None, cur
    for dx, dy in _DIRS8:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height) or not mask[ny, nx]:
            continue
        if dx != 0 and dy != 0 and not (mask[y, nx] or mask[ny, x]):
            continue
        v = field.values[ny, nx]
        if v < best_v or (v == best_v and best is not None and (ny, nx) < (best[1], best[0])):
            best, best_v = (nx, ny), v
    return best


def extract_fmm_path(field: DistanceField, start: tuple, mask: np.ndarray,
                     max_steps: int | None = None):
    """Gradient-descent cell path from start to the field source."""
    if not np.isfinite(field.values[start[1], start[0]]):
        return None
    path = [start]
    cur = start
    limit = max_steps or field.values.size
    for _ in range(limit):
        if cur == field.source:
            return path
        nxt = descend_field(field, cur, mask)
        if nxt is None:
            return None
        path.append(nxt)
        cur = nxt
    return None


def select_frontier(belief, pose, min_cluster_size: int = DEFAULT_MIN_FRONTIER_SIZE,
                    exclude=()):
    """FBE goal selection: cluster frontier cells, score clusters by
    distance / size, return the winning cluster's centroid-nearest cell.
    None when exploration is complete. Clusters whose representative cell is
    in `exclude` are skipped (stuck-goal suppression)."""
    grid = belief.grid
    free = grid.cells == FREE
    unknown = grid.cells == UNKNOWN
    near_unknown = ndimage.binary_dilation(unknown, structure=np.ones((3, 3), bool))
    frontier = free & near_unknown
    if not frontier.any():
        return None
    labels, n = ndimage.label(frontier, structure=np.ones((3, 3), int))
    res = grid.resolution
    px, py = pose.x, pose.y
    best = None  # (score, label, cell)
    for lbl in range(1, n + 1):
        ys, xs = np.nonzero(labels == lbl)
        size = xs.size
        if size < min_cluster_size:
            continue
        cx = (xs.mean() + 0.5) * res
        cy = (ys.mean() + 0.5) * res
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

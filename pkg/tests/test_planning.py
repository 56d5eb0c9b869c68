import heapq
import math
import random

import numpy as np
import pytest

from gridbench.grids import FREE, OBSTACLE, UNKNOWN, OccupancyGrid
from gridbench.mapping import BeliefMap
from gridbench.planning import (
    COST_DIAGONAL,
    COST_STRAIGHT,
    DStarLite,
    NoPathError,
    PlanQuery,
    PlanningError,
    UNKNOWN_BLOCKED,
    UNKNOWN_TRAVERSABLE,
    descend_field,
    dstar_lite_plan,
    extract_fmm_path,
    fmm_field,
    nearest_traversable,
    path_length_m,
    select_frontier,
    traversable_mask,
)

from conftest import grid_from_rows


def dijkstra_cost(mask, start, goal):
    """Independent shortest-path oracle with the same move model."""
    h, w = mask.shape

    def neighbors(x, y):
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1),
                       (1, 1), (1, -1), (-1, 1), (-1, -1)):
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or not mask[ny, nx]:
                continue
            if dx != 0 and dy != 0:
                if not (mask[y, nx] or mask[ny, x]):
                    continue
                yield (nx, ny), COST_DIAGONAL
            else:
                yield (nx, ny), COST_STRAIGHT

    dist = {start: 0}
    heap = [(0, start)]
    while heap:
        d, cur = heapq.heappop(heap)
        if cur == goal:
            return d
        if d > dist.get(cur, math.inf):
            continue
        for nxt, c in neighbors(*cur):
            nd = d + c
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                heapq.heappush(heap, (nd, nxt))
    return None


def random_mask(rng, n=20, p=0.3):
    m = np.ones((n, n), dtype=bool)
    for y in range(n):
        for x in range(n):
            if rng.random() < p:
                m[y, x] = False
    return m


def test_dstar_matches_dijkstra_on_random_grids():
    rng = random.Random(42)
    checked = 0
    for _ in range(60):
        mask = random_mask(rng)
        free = [(x, y) for y in range(20) for x in range(20) if mask[y, x]]
        start, goal = rng.choice(free), rng.choice(free)
        planner = DStarLite(mask, start, goal)
        got = planner.compute()
        want = dijkstra_cost(mask, start, goal)
        assert got == want, f"start={start} goal={goal}"
        if got is not None:
            checked += 1
    assert checked > 20


def test_dstar_incremental_matches_scratch():
    rng = random.Random(7)
    for _ in range(25):
        mask = random_mask(rng, n=15, p=0.2)
        free = [(x, y) for y in range(15) for x in range(15) if mask[y, x]]
        start, goal = rng.choice(free), rng.choice(free)
        planner = DStarLite(mask, start, goal)
        planner.compute()
        for _round in range(3):
            flips = []
            for _ in range(4):
                x, y = rng.randrange(15), rng.randrange(15)
                if (x, y) in (start, goal):
                    continue
                mask[y, x] = not mask[y, x]
                flips.append(((x, y), bool(mask[y, x])))
            planner.update_cells(flips)
            got = planner.compute()
            want = dijkstra_cost(mask, start, goal)
            assert got == want


def test_corner_cut_rule():
    # one blocked orthogonal still allows the diagonal; both blocked forbids it
    rows = [
        "FOF",
        "OFF",
        "FFF",
    ]
    g = grid_from_rows(rows)
    mask = traversable_mask(g, UNKNOWN_BLOCKED, 0)
    planner = DStarLite(mask, (0, 0), (1, 1))
    assert planner.compute() is None  # (0,0) -> (1,1) fully corner-blocked
    rows2 = [
        "FOF",
        "FFF",
        "FFF",
    ]
    g2 = grid_from_rows(rows2)
    mask2 = traversable_mask(g2, UNKNOWN_BLOCKED, 0)
    planner2 = DStarLite(mask2, (0, 0), (1, 1))
    assert planner2.compute() == COST_DIAGONAL


def test_path_cost_structure():
    g = grid_from_rows(["FFF", "FFF", "FFF"])
    p = dstar_lite_plan(PlanQuery(grid=g, start=(0, 0), goal=(2, 2),
                                  unknown_is=UNKNOWN_BLOCKED, inflation_radius=0))
    assert p.cells[0] == (0, 0) and p.cells[-1] == (2, 2)
    assert p.length_m == pytest.approx(2 * math.sqrt(2) * 0.25)


def test_path_length_m_frozen():
    assert path_length_m([(0, 0), (1, 0), (2, 0)], 0.25) == pytest.approx(0.5)
    assert path_length_m([(0, 0), (1, 1)], 0.25) == pytest.approx(math.sqrt(2) * 0.25)
    assert path_length_m([(3, 3)], 0.25) == 0.0


def test_unreachable_raises_with_explored(open_grid):
    open_grid.set_state((3, 1), OBSTACLE)
    open_grid.set_state((3, 2), OBSTACLE)
    open_grid.set_state((3, 3), OBSTACLE)
    open_grid.set_state((3, 4), OBSTACLE)
    open_grid.set_state((3, 5), OBSTACLE)
    with pytest.raises(NoPathError) as e:
        dstar_lite_plan(PlanQuery(grid=open_grid, start=(1, 1), goal=(5, 5),
                                  unknown_is=UNKNOWN_BLOCKED, inflation_radius=0))
    assert e.value.explored  # diagnostics carry the touched cells


def test_untraversable_start_rejected(open_grid):
    with pytest.raises(PlanningError):
        dstar_lite_plan(PlanQuery(grid=open_grid, start=(0, 0), goal=(5, 5),
                                  unknown_is=UNKNOWN_BLOCKED, inflation_radius=0))


def test_traversable_mask_inflation(open_grid):
    m0 = traversable_mask(open_grid, UNKNOWN_BLOCKED, 0)
    m1 = traversable_mask(open_grid, UNKNOWN_BLOCKED, 1)
    assert m0[3, 1] and m0[1, 1]
    assert not m1[1, 1]  # next to the wall ring
    assert m1[3, 3]      # interior survives
    assert m1.sum() < m0.sum()


def test_unknown_policy_in_mask():
    g = OccupancyGrid(3, 3, 0.25)  # all unknown
    assert traversable_mask(g, UNKNOWN_TRAVERSABLE, 0).all()
    assert not traversable_mask(g, UNKNOWN_BLOCKED, 0).any()


def test_fmm_field_euclidean_bounds(open_grid):
    goal = (3, 3)
    field = fmm_field(open_grid, goal, UNKNOWN_BLOCKED, 0)
    res = open_grid.resolution
    gx, gy = (goal[0] + 0.5) * res, (goal[1] + 0.5) * res
    assert field.values[3, 3] == 0.0
    for y in range(1, 6):
        for x in range(1, 6):
            d = field.values[y, x]
            euclid = math.hypot((x + 0.5) * res - gx, (y + 0.5) * res - gy)
            # first-order upwind FMM on an empty map: >= true distance,
            # within the standard discretization overshoot
            assert d >= euclid - 1e-9
            assert d <= euclid * 1.2 + 2 * res


def test_fmm_blocked_cells_are_inf(open_grid):
    field = fmm_field(open_grid, (3, 3), UNKNOWN_BLOCKED, 0)
    assert math.isinf(field.values[0, 0])


def test_descend_field_monotone(open_grid):
    field = fmm_field(open_grid, (5, 5), UNKNOWN_BLOCKED, 0)
    mask = traversable_mask(open_grid, UNKNOWN_BLOCKED, 0)
    cur = (1, 1)
    for _ in range(20):
        nxt = descend_field(field, cur, mask)
        if nxt is None:
            break
        assert field.values[nxt[1], nxt[0]] < field.values[cur[1], cur[0]]
        cur = nxt
    assert cur == (5, 5)


def test_extract_fmm_path_reaches_goal(open_grid):
    field = fmm_field(open_grid, (5, 1), UNKNOWN_BLOCKED, 0)
    mask = traversable_mask(open_grid, UNKNOWN_BLOCKED, 0)
    path = extract_fmm_path(field, (1, 5), mask)
    assert path[0] == (1, 5) and path[-1] == (5, 1)


def test_nearest_traversable_identity_and_remap(open_grid):
    mask = traversable_mask(open_grid, UNKNOWN_BLOCKED, 0)
    assert nearest_traversable(mask, (2, 2)) == (2, 2)
    remapped = nearest_traversable(mask, (0, 0))
    assert mask[remapped[1], remapped[0]]
    assert remapped == (1, 1)


def test_select_frontier_prefers_near_large_cluster():
    class S:
        pass

    s = S()
    g = OccupancyGrid(9, 9, 0.25)
    g.cells[:, :] = UNKNOWN
    g.cells[4, 1:6] = FREE  # corridor of known floor
    s.grid = g
    belief = BeliefMap(grid=g, cell_stamps=np.zeros((9, 9), dtype=np.int64),
                       owner="a", scene_id="s")
    pose = type("P", (), {"x": 0.375, "y": 1.125})()
    cell = select_frontier(belief, pose, 1)
    assert cell is not None
    assert g.cells[cell[1], cell[0]] == FREE


def test_select_frontier_none_when_complete():
    g = OccupancyGrid(5, 5, 0.25, np.full((5, 5), FREE, dtype=np.uint8))
    belief = BeliefMap(grid=g, cell_stamps=np.zeros((5, 5), dtype=np.int64),
                       owner="a", scene_id="s")
    pose = type("P", (), {"x": 0.125, "y": 0.125})()
    assert select_frontier(belief, pose, 1) is None


def test_select_frontier_exclude():
    g = OccupancyGrid(5, 5, 0.25)
    g.cells[2, 1:4] = FREE
    belief = BeliefMap(grid=g, cell_stamps=np.zeros((5, 5), dtype=np.int64),
                       owner="a", scene_id="s")
    pose = type("P", (), {"x": 0.375, "y": 0.625})()
    first = select_frontier(belief, pose, 1)
    assert first is not None
    second = select_frontier(belief, pose, 1, exclude={first})
    assert second != first

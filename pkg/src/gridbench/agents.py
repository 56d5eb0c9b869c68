"""Agent kinematics, the discrete action space, adhesion pick/place, macros."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from gridbench.grids import FREE, OBSTACLE, UNKNOWN
from gridbench.planning import (
    DEFAULT_INFLATION_RADIUS,
    PlanningError,
    PlanQuery,
    UNKNOWN_BLOCKED,
    dstar_lite_plan,
)
from gridbench.sensing import Pose, line_of_sight, wrap_angle

TURN_INCREMENT = math.pi / 4  # headings stay on the 8 compass directions
DEFAULT_ADHESION_RANGE_M = 1.5
DEFAULT_PLACEMENT_RADIUS_M = 1.0

MOVE_FORWARD = "move_forward"
TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
PICK = "pick"
PLACE = "place"
ASK = "ask"
WALK = "walk"
PICK_MACRO = "pick_macro"
STOP = "stop"

PRIMITIVES = (MOVE_FORWARD, TURN_LEFT, TURN_RIGHT, PICK, PLACE, ASK, STOP)
MACROS = (WALK, PICK_MACRO)

OK = "ok"
BLOCKED = "blocked"
PICK_FAILED = "pick_failed"
PLACE_FAILED = "place_failed"
MACRO_FAILED = "macro_failed"
STOPPED = "stopped"


class MacroError(RuntimeError):
    pass


@dataclass(frozen=True)
class Action:
    kind: str
    object_id: str | None = None
    target: tuple | str | None = None
    query: dict | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.object_id is not None:
            d["object_id"] = self.object_id
        if self.target is not None:
            d["target"] = list(self.target) if isinstance(self.target, tuple) else self.target
        if self.query is not None:
            d["query"] = self.query
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        kind = d.get("kind")
        if kind not in PRIMITIVES + MACROS:
            raise ValueError(f"unknown action kind {kind!r}")
        target = d.get("target")
        if isinstance(target, list):
            target = tuple(target)
        return cls(kind=kind, object_id=d.get("object_id"), target=target,
                   query=d.get("query"))


@dataclass
class AgentState:
    id: str
    pose: Pose
    carried: str | None = None
    steps_taken: int = 0
    action_log: list = field(default_factory=list)


def snap_heading(h: float) -> float:
    k = round(h / TURN_INCREMENT) % 8
    return k * TURN_INCREMENT


def heading_dir(h: float) -> tuple:
    k = round(h / TURN_INCREMENT) % 8
    return ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))[k]


class WorldState:
    """Mutable episode-scoped world: grid copy plus movable object instances.

    Duck-compatible with SceneSpec for sensing (`grid`, `objects`,
    `room_of_cell`).
    """

    def __init__(self, scene):
        self.scene = scene
        self.id = scene.id
        self.resolution = scene.resolution
        self.grid = scene.grid.copy()
        self._objects = {o.id: o for o in scene.objects}
        self._shapes = {o.id: _shape_of(o.footprint) for o in scene.objects}
        self.carried_by: dict = {}  # object id -> agent id
        self.agent_cells: dict = {}  # agent id -> cell

    @property
    def objects(self):
        # carried objects have no footprint and are excluded from sensing
        return [o for o in self._objects.values() if o.id not in self.carried_by]

    def object_by_id(self, obj_id: str):
        return self._objects[obj_id]

    def room_of_cell(self, cell):
        return self.scene.room_of_cell(cell)

    def cell_occupied_by_agent(self, cell, except_agent=None):
        for aid, c in self.agent_cells.items():
            if aid != except_agent and c == cell:
                return True
        return False


def _shape_of(footprint):
    if not footprint:
        return [(0, 0)]
    x0 = min(c[0] for c in footprint)
    y0 = min(c[1] for c in footprint)
    return sorted((x - x0, y - y0) for (x, y) in footprint)


def _log(state: AgentState, action: Action, outcome: str):
    state.steps_taken += 1
    state.action_log.append((action, outcome))
    return outcome


def step(world: WorldState, state: AgentState, action: Action,
         adhesion_range: float = DEFAULT_ADHESION_RANGE_M,
         placement_radius: float = DEFAULT_PLACEMENT_RADIUS_M) -> str:
    """Execute one primitive action. Illegal effects become outcomes, never
    exceptions; every primitive costs one step."""
    kind = action.kind
    if kind == TURN_LEFT:
        h = snap_heading(state.pose.heading + TURN_INCREMENT)
        state.pose = Pose(state.pose.x, state.pose.y, h)
        return _log(state, action, OK)
    if kind == TURN_RIGHT:
        h = snap_heading(state.pose.heading - TURN_INCREMENT)
        state.pose = Pose(state.pose.x, state.pose.y, h)
        return _log(state, action, OK)
    if kind == MOVE_FORWARD:
        dx, dy = heading_dir(state.pose.heading)
        cx, cy = state.pose.cell(world.resolution)
        target = (cx + dx, cy + dy)
        if (not world.grid.in_bounds(target)
                or world.grid.state(target) == OBSTACLE
                or world.cell_occupied_by_agent(target, except_agent=state.id)):
            return _log(state, action, BLOCKED)
        if dx != 0 and dy != 0:
            ortho_a = world.grid.state((cx + dx, cy)) == OBSTACLE
            ortho_b = world.grid.state((cx, cy + dy)) == OBSTACLE
            if ortho_a and ortho_b:
                return _log(state, action, BLOCKED)
        nx, ny = world.grid.cell_center(target)
        state.pose = Pose(nx, ny, state.pose.heading)
        world.agent_cells[state.id] = target
        return _log(state, action, OK)
    if kind == PICK:
        return _log(state, action, pick(world, state, action.object_id, adhesion_range))
    if kind == PLACE:
        return _log(state, action, place(world, state, placement_radius))
    if kind == ASK:
        # routing happens in the harness; the ask itself always costs a step
        return _log(state, action, OK)
    if kind == STOP:
        return _log(state, action, STOPPED)
    raise ValueError(f"not a primitive action: {kind}")


def pick(world: WorldState, state: AgentState, obj_id: str,
         adhesion_range: float = DEFAULT_ADHESION_RANGE_M) -> str:
    if state.carried is not None or obj_id is None:
        return PICK_FAILED
    if obj_id not in world._objects or obj_id in world.carried_by:
        return PICK_FAILED
    obj = world._objects[obj_id]
    if not obj.pickable:
        return PICK_FAILED
    if state.pose.distance_to(obj.center) > adhesion_range:
        return PICK_FAILED
    if not line_of_sight(world.grid, state.pose, obj.center, ignore_cells=obj.footprint):
        return PICK_FAILED
    for (x, y) in obj.footprint:
        world.grid.cells[y, x] = FREE
    world._objects[obj_id] = replace(obj, footprint=frozenset(),
                                     center=(state.pose.x, state.pose.y))
    world.carried_by[obj_id] = state.id
    state.carried = obj_id
    return OK


def place(world: WorldState, state: AgentState,
          placement_radius: float = DEFAULT_PLACEMENT_RADIUS_M) -> str:
    if state.carried is None:
        return PLACE_FAILED
    obj_id = state.carried
    obj = world._objects[obj_id]
    shape = world._shapes[obj_id]
    dx, dy = heading_dir(state.pose.heading)
    cx, cy = state.pose.cell(world.resolution)
    drop = (cx + dx, cy + dy)
    res = world.resolution
    radius_cells = placement_radius / res

    candidates = []
    r = int(math.ceil(radius_cells))
    for yy in range(drop[1] - r, drop[1] + r + 1):
        for xx in range(drop[0] - r, drop[0] + r + 1):
            d = math.hypot(xx - drop[0], yy - drop[1])
            if d <= radius_cells:
                candidates.append((d, yy, xx))
    candidates.sort()
    for _d, ay, ax in candidates:
        cells = [(ax + ox, ay + oy) for (ox, oy) in shape]
        ok = True
        for c in cells:
            if (not world.grid.in_bounds(c) or world.grid.state(c) != FREE
                    or world.cell_occupied_by_agent(c)):
                ok = False
                break
        if not ok:
            continue
        for (x, y) in cells:
            world.grid.cells[y, x] = OBSTACLE
        xs = [c[0] for c in cells]
        ys = [c[1] for c in cells]
        center = ((min(xs) + (max(xs) - min(xs) + 1) / 2.0) * res,
                  (min(ys) + (max(ys) - min(ys) + 1) / 2.0) * res)
        world._objects[obj_id] = replace(obj, footprint=frozenset(cells), center=center)
        del world.carried_by[obj_id]
        state.carried = None
        return OK
    return PLACE_FAILED


def expand_path_to_actions(cells, start_heading: float) -> list:
    """Turns plus forward moves realizing a cell path."""
    actions = []
    heading = snap_heading(start_heading)
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        desired = math.atan2(y1 - y0, x1 - x0) % (2 * math.pi)
        delta = wrap_angle(desired - heading)
        k = round(delta / TURN_INCREMENT)
        turn = Action(TURN_LEFT) if k > 0 else Action(TURN_RIGHT)
        for _ in range(abs(k)):
            actions.append(turn)
        heading = desired % (2 * math.pi)
        actions.append(Action(MOVE_FORWARD))
    return actions


def resolve_walk_target(target, graph):
    """A walk target is either a grid cell or a scene-graph node id."""
    if isinstance(target, tuple):
        return target, None
    if graph is None:
        raise MacroError(f"node target {target!r} but no scene graph available")
    try:
        node = graph.node_by_id(target)
    except KeyError:
        raise MacroError(
            f"target {target!r} has not appeared in the constructed map"
        ) from None
    return None, node


def walk_macro(state: AgentState, target, belief,
               graph=None, inflation_radius: int = DEFAULT_INFLATION_RADIUS) -> list:
    """Expand a walk to a target cell or known object node into primitives.

    Plans with D* Lite on the belief map with unknown space blocked; raises
    MacroError when the target is absent from the belief."""
    cell, node = resolve_walk_target(target, graph)
    if node is not None:
        cell = belief.grid.cell_of(*node.center)
    if not belief.grid.in_bounds(cell):
        raise MacroError(f"target cell {cell} outside the map")
    if belief.grid.state(cell) == UNKNOWN:
        raise MacroError(f"target cell {cell} is unknown in the belief map")
    start = state.pose.cell(belief.grid.resolution)
    if start == cell:
        return []
    try:
        path = dstar_lite_plan(PlanQuery(
            grid=belief.grid, start=start, goal=cell,
            unknown_is=UNKNOWN_BLOCKED, inflation_radius=inflation_radius,
        ))
    except PlanningError:
        # inflation can swallow the agent's own cell (e.g. right next to a
        # just-placed object); retry on the bare grid
        try:
            path = dstar_lite_plan(PlanQuery(
                grid=belief.grid, start=start, goal=cell,
                unknown_is=UNKNOWN_BLOCKED, inflation_radius=0,
            ))
        except PlanningError as e:
            raise MacroError(str(e)) from e
    if len(path.cells) <= 1:
        return []
    return expand_path_to_actions(path.cells, state.pose.heading)

"""Egocentric raycast sensing and the visibility-based success test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from gridbench.grids import FREE, OBSTACLE, OccupancyGrid

TWO_PI = 2.0 * math.pi

SUCCESS_DISTANCE_M = 2.0     # "less than 2 meters"
SUCCESS_HALF_ANGLE = math.radians(30.0)  # 60 degree horizontal cone


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float  # radians, [0, 2pi)

    def cell(self, resolution: float):
        return (int(self.x / resolution), int(self.y / resolution))

    def distance_to(self, point) -> float:
        return math.hypot(point[0] - self.x, point[1] - self.y)


@dataclass(frozen=True)
class SensorConfig:
    fov: float = math.pi / 2
    range_m: float = 5.0
    rays: int = 181

    def __post_init__(self):
        if not (0 < self.fov <= TWO_PI):
            raise ValueError("fov must be in (0, 2pi]")
        if self.range_m <= 0:
            raise ValueError("range must be positive")
        if self.rays < 8:
            raise ValueError("need at least 8 rays")


@dataclass
class Observation:
    step: int
    pose: Pose
    visible_cells: list = field(default_factory=list)   # [(cell, state)]
    visible_objects: list = field(default_factory=list)  # [(id, class, (x, y))]
    messages_in: list = field(default_factory=list)
    carried_object: str | None = None
    last_outcome: str | None = None


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a <= 0:
        a += TWO_PI
    return a - math.pi


def traverse_cells(grid: OccupancyGrid, x0_m, y0_m, angle, max_dist_m):
    """Cells crossed by a ray, in order, starting at the source cell.

    Amanatides-Woo traversal in cell coordinates; stops at grid bounds or
    max distance.
    """
    res = grid.resolution
    sx, sy = x0_m / res, y0_m / res
    x, y = int(sx), int(sy)
    dx, dy = math.cos(angle), math.sin(angle)
    t_max = max_dist_m / res
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    if dx != 0:
        t_max_x = ((x + (1 if dx > 0 else 0)) - sx) / dx
        t_delta_x = abs(1.0 / dx)
    else:
        t_max_x, t_delta_x = math.inf, math.inf
    if dy != 0:
        t_max_y = ((y + (1 if dy > 0 else 0)) - sy) / dy
        t_delta_y = abs(1.0 / dy)
    else:
        t_max_y, t_delta_y = math.inf, math.inf
    while True:
        if not grid.in_bounds((x, y)):
            return
        yield (x, y)
        if t_max_x < t_max_y:
            if t_max_x > t_max:
                return
            x += step_x
            t_max_x += t_delta_x
        else:
            if t_max_y > t_max:
                return
            y += step_y
            t_max_y += t_delta_y


def raycast(grid: OccupancyGrid, objects, pose: Pose, cfg: SensorConfig,
            rng=None, noise_sigma: float = 0.0):
    """Reveal cells along `cfg.rays` rays spread across the field of view.

    Returns (visible_cells, visible_objects) where cells are revealed free up
    to and including the first obstacle on each ray, and an object is visible
    iff some ray terminates on its footprint.
    """
    cell_owner = {}
    obj_by_id = {}
    for o in objects:
        obj_by_id[o.id] = o
        for c in o.footprint:
            cell_owner[c] = o.id

    revealed: dict = {pose.cell(grid.resolution): FREE}
    hit_objects: set = set()
    half = cfg.fov / 2.0
    for i in range(cfg.rays):
        if cfg.rays == 1:
            ang = pose.heading
        else:
            ang = pose.heading - half + cfg.fov * i / (cfg.rays - 1)
        for cell in traverse_cells(grid, pose.x, pose.y, ang, cfg.range_m):
            state = grid.state(cell)
            if state == OBSTACLE:
                revealed[cell] = OBSTACLE
                owner = cell_owner.get(cell)
                if owner is not None:
                    hit_objects.add(owner)
                break
            revealed[cell] = FREE

    visible_cells = sorted(revealed.items())
    visible_objects = []
    for oid in sorted(hit_objects):
        o = obj_by_id[oid]
        cx, cy = o.center
        if noise_sigma > 0.0 and rng is not None:
            cx += rng.gauss(0.0, noise_sigma)
            cy += rng.gauss(0.0, noise_sigma)
        visible_objects.append((o.id, o.class_label, (cx, cy)))
    return visible_cells, visible_objects


def raycast_sense(scene, pose: Pose, cfg: SensorConfig, step: int = 0,
                  rng=None, noise_sigma: float = 0.0) -> Observation:
    cells, objs = raycast(scene.grid, scene.objects, pose, cfg,
                          rng=rng, noise_sigma=noise_sigma)
    return Observation(step=step, pose=pose, visible_cells=cells, visible_objects=objs)


def line_of_sight(grid: OccupancyGrid, pose: Pose, target_center,
                  ignore_cells=frozenset()) -> bool:
    """True when no obstacle cell outside `ignore_cells` lies on the segment
    from the pose to the target center."""
    tx, ty = target_center
    dist = pose.distance_to(target_center)
    if dist == 0:
        return True
    ang = math.atan2(ty - pose.y, tx - pose.x)
    for cell in traverse_cells(grid, pose.x, pose.y, ang, dist):
        if grid.state(cell) == OBSTACLE and cell not in ignore_cells:
            return False
    return True


def success_visibility(pose: Pose, target, scene,
                       distance_m: float = SUCCESS_DISTANCE_M,
                       half_angle: float = SUCCESS_HALF_ANGLE) -> bool:
    """Success test: closer than 2 m, within the 60 degree horizontal cone,
    and an unobstructed line of sight to the object center."""
    if pose.distance_to(target.center) >= distance_m:
        return False
    bearing = math.atan2(target.center[1] - pose.y, target.center[0] - pose.x)
    if abs(wrap_angle(bearing - pose.heading)) > half_angle:
        return False
    return line_of_sight(scene.grid, pose, target.center, ignore_cells=target.footprint)

"""Ground-truth scenes: rooms, semantic object instances, procedural generation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from gridbench.grids import FREE, OBSTACLE, UNKNOWN, GridError, OccupancyGrid

DEFAULT_ROOM_LABELS = (
    "kitchen",
    "bedroom",
    "living_room",
    "bathroom",
    "office",
    "dining_room",
    "storage",
    "hallway",
)

# (class_label, pickable) per room label
DEFAULT_ROOM_CLASSES = {
    "kitchen": (("refrigerator", False), ("table", False), ("cup", True), ("bowl", True)),
    "bedroom": (("bed", False), ("wardrobe", False), ("pillow", True), ("book", True)),
    "living_room": (("sofa", False), ("tv", False), ("remote", True), ("vase", True)),
    "bathroom": (("bathtub", False), ("sink", False), ("towel", True)),
    "office": (("desk", False), ("chair", False), ("laptop", True), ("mug", True)),
    "dining_room": (("table", False), ("chair", False), ("plate", True), ("bottle", True)),
    "storage": (("shelf", False), ("box", True), ("toolkit", True)),
    "hallway": (("cabinet", False), ("shoes", True), ("umbrella", True)),
}


class GenerationError(RuntimeError):
    pass


class SceneParseError(ValueError):
    pass


class SceneValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Room:
    id: str
    label: str
    cells: frozenset  # of (x, y)


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    class_label: str
    center: tuple  # (x, y) meters, continuous
    footprint: frozenset  # of (x, y) cells
    room_id: str
    pickable: bool


@dataclass
class SceneSpec:
    id: str
    resolution: float
    grid: OccupancyGrid
    rooms: list
    objects: list
    seed: int
    doorways: frozenset = frozenset()  # free connector cells between rooms

    def room_by_id(self, room_id: str) -> Room:
        for r in self.rooms:
            if r.id == room_id:
                return r
        raise KeyError(room_id)

    def object_by_id(self, obj_id: str) -> ObjectInstance:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(obj_id)

    def room_of_cell(self, cell):
        for r in self.rooms:
            if cell in r.cells:
                return r
        return None

    def free_cells(self) -> list:
        ys, xs = np.nonzero(self.grid.cells == FREE)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    def validate(self) -> None:
        g = self.grid
        if g.count(UNKNOWN) != 0:
            raise SceneValidationError("ground-truth grid contains unknown cells")
        if g.resolution != self.resolution:
            raise SceneValidationError("grid resolution mismatch")
        all_room_cells: dict = {}
        for r in self.rooms:
            if not r.cells:
                raise SceneValidationError(f"room {r.id} has no cells")
            if not _is_connected(r.cells, connectivity=4):
                raise SceneValidationError(f"room {r.id} cells are not 4-connected")
            for c in r.cells:
                if c in all_room_cells:
                    raise SceneValidationError(
                        f"cell {c} belongs to rooms {all_room_cells[c]} and {r.id}"
                    )
                all_room_cells[c] = r.id
        for c in self.doorways:
            if c in all_room_cells:
                raise SceneValidationError(
                    f"doorway cell {c} lies inside room {all_room_cells[c]}"
                )
            if g.state(c) != FREE:
                raise SceneValidationError(f"doorway cell {c} is not free")
        footprint_cells = set()
        for o in self.objects:
            for c in o.footprint:
                footprint_cells.add(c)
                if c not in all_room_cells:
                    raise SceneValidationError(
                        f"object {o.id} footprint cell {c} lies outside all rooms"
                    )
                if all_room_cells[c] != o.room_id:
                    raise SceneValidationError(
                        f"object {o.id} footprint cell {c} lies in room "
                        f"{all_room_cells[c]}, not {o.room_id}"
                    )
                if g.state(c) != OBSTACLE:
                    raise SceneValidationError(
                        f"object {o.id} footprint cell {c} is not an obstacle"
                    )
            xs = [c[0] for c in o.footprint]
            ys = [c[1] for c in o.footprint]
            cx, cy = o.center
            if not (
                min(xs) * self.resolution <= cx <= (max(xs) + 1) * self.resolution
                and min(ys) * self.resolution <= cy <= (max(ys) + 1) * self.resolution
            ):
                raise SceneValidationError(
                    f"object {o.id} center {o.center} outside footprint bounding box"
                )
        for c in all_room_cells:
            if g.state(c) == FREE:
                continue
            if c not in footprint_cells:
                raise SceneValidationError(
                    f"room cell {c} is neither free nor an object footprint cell"
                )

    def __eq__(self, other) -> bool:
        if not isinstance(other, SceneSpec):
            return NotImplemented
        return scene_to_dict(self) == scene_to_dict(other)


@dataclass
class SceneGenConfig:
    width: int = 48
    height: int = 48
    resolution: float = 0.25
    min_rooms: int = 3
    max_rooms: int = 5
    n_objects: int = 10
    min_room_side: int = 8
    doorway_cells: int = 3
    max_footprint_side: int = 2
    inflation_radius: int = 1  # feasibility margin baked into placement
    room_labels: tuple = DEFAULT_ROOM_LABELS
    room_classes: dict = field(default_factory=lambda: dict(DEFAULT_ROOM_CLASSES))


def _is_connected(cells, connectivity: int = 4) -> bool:
    cells = set(cells)
    if not cells:
        return False
    if connectivity == 4:
        offs = ((1, 0), (-1, 0), (0, 1), (0, -1))
    else:
        offs = tuple((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0))
    seen = set()
    stack = [next(iter(sorted(cells)))]
    while stack:
        c = stack.pop()
        if c in seen:
            continue
        seen.add(c)
        x, y = c
        for dx, dy in offs:
            n = (x + dx, y + dy)
            if n in cells and n not in seen:
                stack.append(n)
    return seen == cells


def free_space_connected(grid: OccupancyGrid) -> bool:
    """Single 4-connected free component (flood-fill check)."""
    mask = grid.cells == FREE
    if not mask.any():
        return False
    _, n = ndimage.label(mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    return n == 1


def _inflated_obstacles(cells: np.ndarray, radius: int) -> np.ndarray:
    mask = cells == OBSTACLE
    if radius > 0:
        mask = ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool), iterations=radius)
    return mask


def _inflated_free_ok(cells: np.ndarray, radius: int) -> bool:
    blocked = _inflated_obstacles(cells, radius)
    free = (cells == FREE) & ~blocked
    if not free.any():
        return False
    _, n = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    return n == 1


def project_occupancy(scene: SceneSpec) -> OccupancyGrid:
    """Rebuild the ground-truth grid from rooms, doorways, and object
    footprints."""
    g = scene.grid
    cells = np.full((g.height, g.width), OBSTACLE, dtype=np.uint8)
    for r in scene.rooms:
        for (x, y) in r.cells:
            cells[y, x] = FREE
    for (x, y) in scene.doorways:
        cells[y, x] = FREE
    for o in scene.objects:
        for (x, y) in o.footprint:
            cells[y, x] = OBSTACLE
    return OccupancyGrid(g.width, g.height, scene.resolution, cells)


def generate_scene(config: SceneGenConfig, seed: int) -> SceneSpec:
    """Procedural scene: recursive axis-aligned room split, walls with doorways,
    rectangular objects placed per room vocabulary. Deterministic per (config, seed)."""
    rng = random.Random(seed)
    w, h = config.width, config.height
    if w < config.min_room_side + 2 or h < config.min_room_side + 2:
        raise GenerationError(
            f"grid {w}x{h} too small for min_room_side {config.min_room_side}"
        )
    n_rooms = rng.randint(config.min_rooms, config.max_rooms)

    # interior rectangles, inclusive bounds; boundary ring is wall
    min_side = config.min_room_side
    door_margin = config.inflation_radius + 1  # keep lanes clear of cross walls

    def splittable(r):
        x0, y0, x1, y1 = r
        return (x1 - x0 + 1) >= 2 * min_side + 1 or (y1 - y0 + 1) >= 2 * min_side + 1

    cells = None
    for _layout_attempt in range(50):
        regions = [(1, 1, w - 2, h - 2)]
        walls: list = []  # (orientation, position, span_lo, span_hi, doorway cells)
        feasible = True
        while len(regions) < n_rooms:
            candidates = [i for i, r in enumerate(regions) if splittable(r)]
            if not candidates:
                raise GenerationError(
                    f"cannot fit {n_rooms} rooms of side >= {min_side} into {w}x{h} grid"
                )
            # split the largest splittable region
            i = max(candidates, key=lambda i: (
                (regions[i][2] - regions[i][0] + 1) * (regions[i][3] - regions[i][1] + 1),
                -i,
            ))
            x0, y0, x1, y1 = regions.pop(i)
            width_ok = (x1 - x0 + 1) >= 2 * min_side + 1
            height_ok = (y1 - y0 + 1) >= 2 * min_side + 1
            if width_ok and height_ok:
                vertical = rng.random() < 0.5
            else:
                vertical = width_ok
            if vertical:
                c = rng.randint(x0 + min_side, x1 - min_side)
                dlo, dhi = y0 + door_margin, y1 - config.doorway_cells + 1 - door_margin
                if dhi < dlo:
                    feasible = False
                    break
                door0 = rng.randint(dlo, dhi)
                door = [(c, yy) for yy in range(door0, door0 + config.doorway_cells)]
                walls.append(("v", c, y0, y1, door))
                regions.insert(i, (x0, y0, c - 1, y1))
                regions.insert(i + 1, (c + 1, y0, x1, y1))
            else:
                c = rng.randint(y0 + min_side, y1 - min_side)
                dlo, dhi = x0 + door_margin, x1 - config.doorway_cells + 1 - door_margin
                if dhi < dlo:
                    feasible = False
                    break
                door0 = rng.randint(dlo, dhi)
                door = [(xx, c) for xx in range(door0, door0 + config.doorway_cells)]
                walls.append(("h", c, x0, x1, door))
                regions.insert(i, (x0, y0, x1, c - 1))
                regions.insert(i + 1, (x0, c + 1, x1, y1))
        if not feasible:
            continue

        cells = np.full((h, w), OBSTACLE, dtype=np.uint8)
        for (x0, y0, x1, y1) in regions:
            cells[y0:y1 + 1, x0:x1 + 1] = FREE
        for orient, c, lo, hi, door in walls:
            if orient == "v":
                cells[lo:hi + 1, c] = OBSTACLE
            else:
                cells[c, lo:hi + 1] = OBSTACLE
            for (dx, dy) in door:
                cells[dy, dx] = FREE
        # a later wall can still abut an earlier doorway; only accept layouts
        # an inflated-radius agent can fully traverse
        if _inflated_free_ok(cells, config.inflation_radius):
            break
        cells = None
    if cells is None:
        raise GenerationError(
            f"no traversable {n_rooms}-room layout found for seed {seed}"
        )

    rooms = []
    for idx, (x0, y0, x1, y1) in enumerate(sorted(regions)):
        room_cells = frozenset(
            (x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)
            if cells[y, x] == FREE
        )
        label = rng.choice(config.room_labels)
        rooms.append(Room(id=f"room{idx:02d}", label=label, cells=room_cells))

    # room lookup for doorway cells (doorways belong to no room)
    room_of = {}
    for r in rooms:
        for c in r.cells:
            room_of[c] = r

    objects: list = []
    occupied: set = set()
    res = config.resolution
    area_weights = [len(r.cells) for r in rooms]
    for oi in range(config.n_objects):
        placed = False
        for _attempt in range(60):
            room = rng.choices(rooms, weights=area_weights, k=1)[0]
            vocab = config.room_classes.get(room.label)
            if not vocab:
                continue
            cls, pickable = vocab[rng.randrange(len(vocab))]
            fw = rng.randint(1, config.max_footprint_side)
            fh = rng.randint(1, config.max_footprint_side)
            xs = sorted({c[0] for c in room.cells})
            ys = sorted({c[1] for c in room.cells})
            ax = rng.randint(min(xs), max(xs) - fw + 1) if max(xs) - fw + 1 >= min(xs) else None
            ay = rng.randint(min(ys), max(ys) - fh + 1) if max(ys) - fh + 1 >= min(ys) else None
            if ax is None or ay is None:
                continue
            footprint = {(x, y) for x in range(ax, ax + fw) for y in range(ay, ay + fh)}
            if not footprint <= room.cells or footprint & occupied:
                continue
            trial = cells.copy()
            for (x, y) in footprint:
                trial[y, x] = OBSTACLE
            free_mask = trial == FREE
            _, n = ndimage.label(
                free_mask, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
            )
            if n != 1 or not _inflated_free_ok(trial, config.inflation_radius):
                continue
            # pick/navigation feasibility: a plannable cell near the object
            blocked = _inflated_obstacles(trial, config.inflation_radius)
            planfree = (trial == FREE) & ~blocked
            cx = (ax + fw / 2.0) * res
            cy = (ay + fh / 2.0) * res
            pys, pxs = np.nonzero(planfree)
            d2 = ((pxs + 0.5) * res - cx) ** 2 + ((pys + 0.5) * res - cy) ** 2
            if d2.size == 0 or d2.min() > 1.0:
                continue
            cells = trial
            occupied |= footprint
            objects.append(ObjectInstance(
                id=f"obj{oi:03d}",
                class_label=cls,
                center=(cx, cy),
                footprint=frozenset(footprint),
                room_id=room.id,
                pickable=pickable,
            ))
            placed = True
            break
        if not placed and config.n_objects > 0 and not objects and oi == config.n_objects - 1:
            raise GenerationError("could not place any object under the connectivity constraint")

    grid = OccupancyGrid(w, h, res, cells)
    doorways = frozenset(c for _o, _c, _lo, _hi, door in walls for c in door)
    scene = SceneSpec(
        id=f"scene-{seed}",
        resolution=res,
        grid=grid,
        rooms=rooms,
        objects=objects,
        seed=seed,
        doorways=doorways,
    )
    scene.validate()
    return scene


# ---------------------------------------------------------------------------
# serialization

def scene_to_dict(scene: SceneSpec) -> dict:
    return {
        "id": scene.id,
        "resolution": scene.resolution,
        "width": scene.grid.width,
        "height": scene.grid.height,
        "cells": scene.grid.encode_rows(),
        "rooms": [
            {"id": r.id, "label": r.label, "cells": sorted([list(c) for c in r.cells])}
            for r in scene.rooms
        ],
        "objects": [
            {
                "id": o.id,
                "class_label": o.class_label,
                "center": list(o.center),
                "footprint": sorted([list(c) for c in o.footprint]),
                "room_id": o.room_id,
                "pickable": o.pickable,
            }
            for o in scene.objects
        ],
        "doorways": sorted([list(c) for c in scene.doorways]),
        "seed": scene.seed,
    }


def scene_from_dict(data: dict) -> SceneSpec:
    try:
        grid = OccupancyGrid.decode_rows(data["cells"], float(data["resolution"]))
        rooms = [
            Room(id=r["id"], label=r["label"],
                 cells=frozenset(tuple(c) for c in r["cells"]))
            for r in data["rooms"]
        ]
        objects = [
            ObjectInstance(
                id=o["id"],
                class_label=o["class_label"],
                center=tuple(o["center"]),
                footprint=frozenset(tuple(c) for c in o["footprint"]),
                room_id=o["room_id"],
                pickable=bool(o["pickable"]),
            )
            for o in data["objects"]
        ]
        scene = SceneSpec(
            id=data["id"],
            resolution=float(data["resolution"]),
            grid=grid,
            rooms=rooms,
            objects=objects,
            seed=int(data["seed"]),
            doorways=frozenset(tuple(c) for c in data.get("doorways", [])),
        )
    except GridError as e:
        raise SceneParseError(str(e)) from e
    except (KeyError, TypeError, IndexError) as e:
        raise SceneParseError(f"malformed scene file: missing or bad field {e}") from e
    scene.validate()
    return scene


def save_scene(scene: SceneSpec, path) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_scene(path) -> SceneSpec:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SceneParseError(f"invalid JSON at line {e.lineno}, col {e.colno}: {e.msg}") from e
    return scene_from_dict(data)

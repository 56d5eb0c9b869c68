"""Task generation from scene semantics, templated instructions, adjudication."""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

import numpy as np

from gridbench.grids import FREE
from gridbench.planning import (
    DEFAULT_INFLATION_RADIUS,
    NoPathError,
    PlanQuery,
    UNKNOWN_BLOCKED,
    dstar_lite_plan,
    traversable_mask,
)
from gridbench.sensing import success_visibility

B1 = "B1"
B2 = "B2"
B3 = "B3"
B4H = "B4H"  # hierarchical interaction
B4Z = "B4Z"  # horizontal interaction
BENCHMARKS = (B1, B2, B3, B4H, B4Z)

EXPLORE_INSTRUCTION = "Please explore the entire scene as quickly as possible"

DEFAULT_BUDGETS = {B1: 500, B2: 500, B3: 200, B4H: 50, B4Z: 50}
DEFAULT_PLACE_RADIUS_M = 1.0

_FIND_RE = re.compile(r"^Find an (?P<obj>\S+) in (?P<room>\S+)\.$")
_TAKE_RE = re.compile(r"^take the (?P<obj1>\S+) in (?P<room1>\S+) to (?P<obj2>\S+) in (?P<room2>\S+)\.$")
_ROBOT_TAKE_RE = re.compile(
    r"^robot (?P<n>\d+), please take the (?P<obj1>\S+) in (?P<room1>\S+) "
    r"to (?P<obj2>\S+) in (?P<room2>\S+)\.$"
)


class TaskGenerationError(RuntimeError):
    pass


@dataclass
class Task:
    benchmark: str
    instruction: str
    goal: dict = field(default_factory=dict)
    start: tuple | None = None  # assigned agent spawn cell
    shortest_path_m: float = 0.0
    solvable: bool = True
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "instruction": self.instruction,
            "goal": self.goal,
            "start": list(self.start) if self.start else None,
            "shortest_path_m": self.shortest_path_m,
            "solvable": self.solvable,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Task":
        return cls(
            benchmark=d["benchmark"],
            instruction=d["instruction"],
            goal=dict(d.get("goal", {})),
            start=tuple(d["start"]) if d.get("start") else None,
            shortest_path_m=float(d.get("shortest_path_m", 0.0)),
            solvable=bool(d.get("solvable", True)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class EpisodeResult:
    task: Task
    success: bool
    executed_path_m: float
    executed_actions: int
    final_distance_m: float | None
    agents: dict = field(default_factory=dict)  # agent id -> per-agent summary
    extra: dict = field(default_factory=dict)   # e.g. ser / mrmse for B3

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "success": self.success,
            "executed_path_m": self.executed_path_m,
            "executed_actions": self.executed_actions,
            "final_distance_m": self.final_distance_m,
            "agents": self.agents,
            "extra": self.extra,
        }


def parse_instruction(instruction: str):
    """Recover the structured goal from a template instruction (round trip)."""
    if instruction == EXPLORE_INSTRUCTION:
        return B3, {}
    m = _FIND_RE.match(instruction)
    if m:
        return B1, {"target_class": m["obj"], "target_room": m["room"]}
    m = _ROBOT_TAKE_RE.match(instruction)
    if m:
        return B4H, {
            "target_class": m["obj1"], "target_room": m["room1"],
            "dest_class": m["obj2"], "dest_room": m["room2"],
            "assigned_agent": f"robot{int(m['n'])}",
        }
    m = _TAKE_RE.match(instruction)
    if m:
        return B2, {
            "target_class": m["obj1"], "target_room": m["room1"],
            "dest_class": m["obj2"], "dest_room": m["room2"],
        }
    raise ValueError(f"unrecognized instruction: {instruction!r}")


def render_instruction(benchmark: str, goal: dict) -> str:
    if benchmark == B3:
        return EXPLORE_INSTRUCTION
    if benchmark == B1:
        return f"Find an {goal['target_class']} in {goal['target_room']}."
    body = (f"take the {goal['target_class']} in {goal['target_room']} "
            f"to {goal['dest_class']} in {goal['dest_room']}.")
    if benchmark in (B4H, B4Z):
        n = int(goal["assigned_agent"].removeprefix("robot"))
        return f"robot {n}, please {body}"
    return body


def spawn_cells(scene, inflation_radius: int = DEFAULT_INFLATION_RADIUS) -> list:
    """Free cells an inflated-radius agent can plan from, row-major order."""
    mask = traversable_mask(scene.grid, UNKNOWN_BLOCKED, inflation_radius) \
        & (scene.grid.cells == FREE)
    ys, xs = np.nonzero(mask)
    return [(int(x), int(y)) for y, x in zip(ys, xs)]


def _room_label(scene, room_id: str) -> str:
    return scene.room_by_id(room_id).label


def _path_to_object(scene, start, obj, inflation_radius):
    goal = scene.grid.cell_of(*obj.center)
    path = dstar_lite_plan(PlanQuery(
        grid=scene.grid, start=start, goal=goal,
        unknown_is=UNKNOWN_BLOCKED, inflation_radius=inflation_radius,
    ))
    return path


def plan_for_task(scene, task: Task,
                  inflation_radius: int = DEFAULT_INFLATION_RADIUS) -> dict:
    """Optimal target choice and path legs for a task on the ground truth.

    Returns {"target", "leg1", "dest", "leg2", "total_m"}; carry tasks get two
    legs, navigation tasks one. Ties break by object id."""
    goal = task.goal
    start = task.start
    targets = instances_matching(scene, goal["target_class"], goal.get("target_room"))
    if not targets:
        raise TaskGenerationError("no instance matches the task goal")
    best = None
    for obj in sorted(targets, key=lambda o: o.id):
        try:
            leg1 = _path_to_object(scene, start, obj, inflation_radius)
        except NoPathError:
            continue
        total = leg1.length_m
        cand = {"target": obj, "leg1": leg1, "dest": None, "leg2": None}
        if goal.get("dest_class"):
            dests = instances_matching(scene, goal["dest_class"], goal.get("dest_room"))
            dest_best = None
            for dest in sorted(dests, key=lambda o: o.id):
                if dest.id == obj.id:
                    continue
                try:
                    leg2 = _path_to_object(scene, leg1.cells[-1], dest, inflation_radius)
                except NoPathError:
                    continue
                if dest_best is None or leg2.length_m < dest_best[1].length_m:
                    dest_best = (dest, leg2)
            if dest_best is None:
                continue
            cand["dest"], cand["leg2"] = dest_best
            total += dest_best[1].length_m
        cand["total_m"] = total
        if best is None or total < best["total_m"]:
            best = cand
    if best is None:
        raise NoPathError("no matching instance reachable from the start")
    return best


def ground_truth_path(scene, task: Task,
                      inflation_radius: int = DEFAULT_INFLATION_RADIUS) -> float:
    """Shortest-path length in meters on the ground-truth grid from the task
    start to the nearest matching target (two legs for carry tasks)."""
    return plan_for_task(scene, task, inflation_radius)["total_m"]


def instances_matching(scene, class_label: str, room_label: str | None = None) -> list:
    out = []
    for o in scene.objects:
        if o.class_label != class_label:
            continue
        if room_label is not None and _room_label(scene, o.room_id) != room_label:
            continue
        out.append(o)
    return out


def generate_tasks(scene, benchmark: str, count: int, seed: int,
                   n_agents: int = 1,
                   inflation_radius: int = DEFAULT_INFLATION_RADIUS,
                   max_path_m: float | None = None) -> list:
    """Deterministic template tasks; every emitted task is solvable.

    `max_path_m` rejects tasks whose ground-truth path exceeds the bound,
    keeping tasks executable under tight action budgets."""
    if benchmark not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {benchmark!r}")
    rng = random.Random(seed)
    cells = spawn_cells(scene, inflation_radius)
    if not cells:
        raise TaskGenerationError("scene has no plannable spawn cells")
    tasks = []
    if benchmark == B3:
        for i in range(count):
            tasks.append(Task(
                benchmark=B3, instruction=EXPLORE_INSTRUCTION, goal={},
                start=rng.choice(cells), shortest_path_m=0.0,
                solvable=True, seed=seed + i,
            ))
        return tasks

    pickables = sorted((o for o in scene.objects if o.pickable), key=lambda o: o.id)
    all_objects = sorted(scene.objects, key=lambda o: o.id)
    if not all_objects:
        raise TaskGenerationError("scene has no objects")
    if benchmark != B1 and len(pickables) == 0:
        raise TaskGenerationError("no pickable objects for a carry task")
    if benchmark != B1 and len(all_objects) < 2:
        raise TaskGenerationError("carry tasks need at least two objects")

    for i in range(count):
        task = None
        for _attempt in range(80):
            start = rng.choice(cells)
            if benchmark == B1:
                obj = rng.choice(all_objects)
                goal = {
                    "target_class": obj.class_label,
                    "target_room": _room_label(scene, obj.room_id),
                }
            else:
                src = rng.choice(pickables)
                # a destination of the carried class would be ambiguous
                dest_pool = [o for o in all_objects
                             if o.class_label != src.class_label]
                if not dest_pool:
                    continue
                dest = rng.choice(dest_pool)
                goal = {
                    "target_class": src.class_label,
                    "target_room": _room_label(scene, src.room_id),
                    "dest_class": dest.class_label,
                    "dest_room": _room_label(scene, dest.room_id),
                }
                if any(math.hypot(s.center[0] - d.center[0],
                                  s.center[1] - d.center[1]) <= DEFAULT_PLACE_RADIUS_M
                       for s in instances_matching(scene, goal["target_class"],
                                                   goal["target_room"])
                       for d in instances_matching(scene, goal["dest_class"],
                                                   goal["dest_room"])):
                    continue  # the goal would already hold at spawn
                if benchmark in (B4H, B4Z):
                    goal["assigned_agent"] = f"robot{i % n_agents}"
            cand = Task(
                benchmark=benchmark,
                instruction=render_instruction(benchmark, goal),
                goal=goal, start=start, seed=seed + i,
            )
            try:
                cand.shortest_path_m = ground_truth_path(scene, cand, inflation_radius)
            except (NoPathError, TaskGenerationError):
                continue
            if max_path_m is not None and cand.shortest_path_m > max_path_m:
                continue
            task = cand
            break
        if task is None:
            raise TaskGenerationError(
                f"could not generate a solvable {benchmark} task on scene {scene.id}"
            )
        tasks.append(task)
    return tasks


def check_success(benchmark: str, world, agents: dict, task: Task,
                  place_radius: float = DEFAULT_PLACE_RADIUS_M):
    """Terminal success predicate. B3 has no boolean success (returns None)."""
    if benchmark == B3:
        return None
    goal = task.goal
    if benchmark == B1:
        agent = _assigned_agent(agents, goal)
        scene = world.scene if hasattr(world, "scene") else world
        for obj in instances_matching(scene, goal["target_class"], goal.get("target_room")):
            cur = world.object_by_id(obj.id) if hasattr(world, "object_by_id") else obj
            if success_visibility(agent.pose, cur, world):
                return True
        return False
    # carry benchmarks: moved source rests within place_radius of a destination
    agent = _assigned_agent(agents, goal)
    scene = world.scene
    sources = instances_matching(scene, goal["target_class"], goal.get("target_room"))
    dests = instances_matching(scene, goal["dest_class"], goal.get("dest_room"))
    for src in sources:
        cur = world.object_by_id(src.id)
        if cur.id in world.carried_by:
            continue
        for dest in dests:
            if dest.id == src.id:
                continue
            dcur = world.object_by_id(dest.id)
            d = math.hypot(cur.center[0] - dcur.center[0], cur.center[1] - dcur.center[1])
            if d <= place_radius:
                return True
    return False


def _assigned_agent(agents: dict, goal: dict):
    name = goal.get("assigned_agent")
    if name is not None and name in agents:
        return agents[name]
    return agents[sorted(agents)[0]]


def final_distance(world, agents: dict, task: Task):
    """Navigation error: assigned agent's distance to the nearest matching
    target instance at episode end."""
    if task.benchmark == B3 or "target_class" not in task.goal:
        return None
    agent = _assigned_agent(agents, task.goal)
    scene = world.scene if hasattr(world, "scene") else world
    targets = instances_matching(scene, task.goal["target_class"],
                                 task.goal.get("target_room"))
    if not targets:
        return None
    dists = []
    for t in targets:
        cur = world.object_by_id(t.id) if hasattr(world, "object_by_id") else t
        dists.append(agent.pose.distance_to(cur.center))
    return min(dists)

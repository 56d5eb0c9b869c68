"""Scripted baseline policies and the policy interface."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from gridbench import agents as ag
from gridbench import planning, tasks
from gridbench.agents import Action
from gridbench.grids import UNKNOWN
from gridbench.interaction import Query, Reply
from gridbench.planning import (
    UNKNOWN_TRAVERSABLE,
    descend_field,
    fmm_field,
    nearest_traversable,
    select_frontier,
    traversable_mask,
)
from gridbench.sensing import wrap_angle


@dataclass
class PolicyContext:
    """Everything a policy may legitimately see beyond its observations.

    `scene` is only populated for privileged policies (oracle)."""

    scene: object = None
    inflation_radius: int = planning.DEFAULT_INFLATION_RADIUS
    min_frontier_size: int = planning.DEFAULT_MIN_FRONTIER_SIZE
    adhesion_range_m: float = ag.DEFAULT_ADHESION_RANGE_M
    place_radius_m: float = tasks.DEFAULT_PLACE_RADIUS_M
    extras: dict = field(default_factory=dict)


class Policy:
    """decide() must be deterministic given (observation history, task, seed)."""

    name = "policy"

    def reset(self, task, seed: int, agent_id: str, context: PolicyContext) -> None:
        self.task = task
        self.seed = seed
        self.agent_id = agent_id
        self.context = context

    def decide(self, obs, belief, graph) -> Action:
        raise NotImplementedError


class RandomPolicy(Policy):
    """Uniform over movement primitives with a small stop probability."""

    name = "random"

    def __init__(self, stop_probability: float = 0.01):
        self.stop_probability = stop_probability

    def reset(self, task, seed, agent_id, context):
        super().reset(task, seed, agent_id, context)
        self.rng = random.Random(seed)

    def decide(self, obs, belief, graph) -> Action:
        if self.rng.random() < self.stop_probability:
            return Action(ag.STOP)
        kind = self.rng.choice((ag.MOVE_FORWARD, ag.TURN_LEFT, ag.TURN_RIGHT))
        return Action(kind)


class FrontierPolicy(Policy):
    """FBE global goals followed along an FMM distance field."""

    name = "frontier"

    def reset(self, task, seed, agent_id, context):
        super().reset(task, seed, agent_id, context)
        self.goal = None
        self.field = None
        self.mask = None
        self.frontier_cell = None
        self.blacklist = set()

    def _replan(self, belief, pose) -> bool:
        frontier = select_frontier(belief, pose, self.context.min_frontier_size,
                                   exclude=self.blacklist)
        if frontier is None:
            return False
        self.frontier_cell = frontier
        mask = traversable_mask(belief.grid, UNKNOWN_TRAVERSABLE,
                                self.context.inflation_radius)
        goal = nearest_traversable(mask, frontier)
        field = fmm_field(belief.grid, goal, UNKNOWN_TRAVERSABLE,
                          self.context.inflation_radius)
        cur = pose.cell(belief.grid.resolution)
        if not np.isfinite(field.values[cur[1], cur[0]]):
            # inflation walled the agent in; fall back to the bare grid
            mask = traversable_mask(belief.grid, UNKNOWN_TRAVERSABLE, 0)
            goal = nearest_traversable(mask, frontier)
            field = fmm_field(belief.grid, goal, UNKNOWN_TRAVERSABLE, 0)
        self.goal, self.field, self.mask = goal, field, mask
        return True

    def decide(self, obs, belief, graph) -> Action:
        pose = obs.pose
        cur = pose.cell(belief.grid.resolution)
        need_replan = (
            self.goal is None
            or cur == self.goal
            or obs.last_outcome == ag.BLOCKED
            or not _still_frontierish(belief, self.goal)
            or not np.isfinite(self.field.values[cur[1], cur[0]])
        )
        if need_replan and not self._replan(belief, pose):
            return Action(ag.STOP)
        nxt = descend_field(self.field, cur, self.mask)
        for _ in range(8):
            if nxt is not None:
                break
            # goal yields no descent (unreachable or already reached but still
            # fronting unobservable space): suppress it and pick another
            self.blacklist.add(self.frontier_cell)
            if not self._replan(belief, pose):
                return Action(ag.STOP)
            nxt = descend_field(self.field, cur, self.mask)
        if nxt is None:
            return Action(ag.STOP)
        return _step_toward(pose, cur, nxt)


def _still_frontierish(belief, goal) -> bool:
    """Goal remains worth pursuing while unknown space survives near it."""
    gx, gy = goal
    cells = belief.grid.cells
    h, w = cells.shape
    for dy in (-2, -1, 0, 1, 2):
        for dx in (-2, -1, 0, 1, 2):
            x, y = gx + dx, gy + dy
            if 0 <= x < w and 0 <= y < h and cells[y, x] == UNKNOWN:
                return True
    return False


def _step_toward(pose, cur, nxt) -> Action:
    desired = math.atan2(nxt[1] - cur[1], nxt[0] - cur[0])
    delta = wrap_angle(desired - pose.heading)
    k = round(delta / ag.TURN_INCREMENT)
    if k == 0:
        return Action(ag.MOVE_FORWARD)
    return Action(ag.TURN_LEFT) if k > 0 else Action(ag.TURN_RIGHT)


class OraclePolicy(Policy):
    """Privileged instruction follower: plans on the ground-truth map and
    replays the optimal legs as primitive actions, with a success-cone
    rotation scan on arrival."""

    name = "oracle"
    MAX_SCAN_TURNS = 8

    def reset(self, task, seed, agent_id, context):
        super().reset(task, seed, agent_id, context)
        self.phase = "plan"
        self.scan_turns = 0
        self.plan = None
        self.pending: list = []

    def _task_plan(self):
        if self.plan is None:
            self.plan = tasks.plan_for_task(self.context.scene, self.task,
                                            self.context.inflation_radius)
        return self.plan

    def _walk_leg(self, obs, cells):
        self.pending = ag.expand_path_to_actions(cells, obs.pose.heading)

    def decide(self, obs, belief, graph) -> Action:
        scene = self.context.scene
        if obs.last_outcome == ag.BLOCKED:
            return Action(ag.STOP)
        if self.pending:
            return self.pending.pop(0)
        try:
            plan = self._task_plan()
        except (planning.NoPathError, tasks.TaskGenerationError):
            return Action(ag.STOP)

        if self.phase == "plan":
            self.phase = "scan" if plan["dest"] is None else "pick"
            self._walk_leg(obs, plan["leg1"].cells)
            if self.pending:
                return self.pending.pop(0)
            # already standing at the leg end; fall through to the next phase

        if self.phase == "scan":
            target = plan["target"]
            from gridbench.sensing import success_visibility
            if success_visibility(obs.pose, target, scene):
                return Action(ag.STOP)
            if self.scan_turns >= self.MAX_SCAN_TURNS:
                return Action(ag.STOP)
            self.scan_turns += 1
            return Action(ag.TURN_LEFT)

        if self.phase == "pick":
            self.phase = "to_dest"
            return Action(ag.PICK, object_id=plan["target"].id)

        if self.phase == "to_dest":
            if obs.carried_object is None:
                return Action(ag.STOP)
            self.phase = "face_dest"
            self._walk_leg(obs, plan["leg2"].cells)
            if self.pending:
                return self.pending.pop(0)

        if self.phase == "face_dest":
            dest = plan["dest"]
            bearing = math.atan2(dest.center[1] - obs.pose.y,
                                 dest.center[0] - obs.pose.x)
            delta = wrap_angle(bearing - obs.pose.heading)
            k = round(delta / ag.TURN_INCREMENT)
            if k != 0 and self.scan_turns < self.MAX_SCAN_TURNS:
                self.scan_turns += 1
                return Action(ag.TURN_LEFT) if k > 0 else Action(ag.TURN_RIGHT)
            self.phase = "done"
            return Action(ag.PLACE)

        return Action(ag.STOP)


class QueryingPolicy(Policy):
    """Hierarchical-interaction agent: asks the administrator for the task
    objects, walks to the replied centers, falls back to wandering when the
    administrator's map lacks them."""

    name = "querying"
    MAX_SCAN_TURNS = 8

    def reset(self, task, seed, agent_id, context):
        super().reset(task, seed, agent_id, context)
        self.rng = random.Random(seed)
        self.phase = "ask_target"
        self.target_center = None
        self.dest_center = None
        self.scan_turns = 0
        self.walk_retries = 0
        self.nudging = False
        self.nudge_count = 0

    def _reply(self, obs):
        for msg in obs.messages_in:
            if isinstance(msg, Reply):
                return msg
            if isinstance(msg, dict) and msg.get("type") == "reply":
                return Reply.from_dict(msg)
        return None

    def _nearest_entry(self, reply, pose):
        best = None
        for (cls, center, room) in reply.entries:
            d = pose.distance_to(center)
            if best is None or d < best[0]:
                best = (d, center)
        return best[1] if best else None

    def _wander(self):
        # budget-burning fallback; never stops
        return Action(self.rng.choice((ag.MOVE_FORWARD, ag.MOVE_FORWARD,
                                       ag.TURN_LEFT, ag.TURN_RIGHT)))

    def decide(self, obs, belief, graph) -> Action:
        goal = self.task.goal
        assigned = goal.get("assigned_agent")
        if assigned is not None and assigned != self.agent_id:
            return Action(ag.STOP)  # the instruction addresses another robot

        if self.phase == "ask_target":
            self.phase = "await_target"
            return Action(ag.ASK, query=Query(goal["target_class"],
                                              goal.get("target_room")).to_dict())
        if self.phase == "await_target":
            reply = self._reply(obs)
            if reply is None or reply.refused or not reply.entries:
                self.phase = "wander"
                return self._wander()
            self.target_center = self._nearest_entry(reply, obs.pose)
            self.phase = "walk_target"
            cell = belief.grid.cell_of(*self.target_center)
            return Action(ag.WALK, target=cell)

        if self.phase == "walk_target":
            if obs.last_outcome == ag.MACRO_FAILED:
                self.phase = "wander"
                return self._wander()
            if obs.last_outcome == ag.BLOCKED and self.walk_retries < 3:
                # transient block (usually another agent); replan the walk
                self.walk_retries += 1
                return Action(ag.WALK,
                              target=belief.grid.cell_of(*self.target_center))
            # arrived: find the object and pick it
            best = None
            for (oid, cls, center) in obs.visible_objects:
                if cls != goal["target_class"]:
                    continue
                d = obs.pose.distance_to(center)
                if d <= self.context.adhesion_range_m and (best is None or d < best[0]):
                    best = (d, oid)
            if best is not None:
                self.phase = "ask_dest"
                return Action(ag.PICK, object_id=best[1])
            if self.scan_turns < self.MAX_SCAN_TURNS:
                self.scan_turns += 1
                return Action(ag.TURN_LEFT)
            self.phase = "wander"
            return self._wander()

        if self.phase == "ask_dest":
            if obs.carried_object is None:
                self.phase = "wander"
                return self._wander()
            self.phase = "await_dest"
            return Action(ag.ASK, query=Query(goal["dest_class"],
                                              goal.get("dest_room")).to_dict())
        if self.phase == "await_dest":
            reply = self._reply(obs)
            if reply is None or reply.refused or not reply.entries:
                self.phase = "wander"
                return self._wander()
            self.dest_center = self._nearest_entry(reply, obs.pose)
            self.phase = "walk_dest"
            cell = belief.grid.cell_of(*self.dest_center)
            return Action(ag.WALK, target=cell)

        if self.phase == "walk_dest":
            if obs.last_outcome == ag.MACRO_FAILED:
                self.phase = "wander"
                return self._wander()
            blocked = obs.last_outcome == ag.BLOCKED
            if blocked and not self.nudging and self.walk_retries < 6:
                self.walk_retries += 1
                return Action(ag.WALK,
                              target=belief.grid.cell_of(*self.dest_center))
            bearing = math.atan2(self.dest_center[1] - obs.pose.y,
                                 self.dest_center[0] - obs.pose.x)
            delta = wrap_angle(bearing - obs.pose.heading)
            k = round(delta / ag.TURN_INCREMENT)
            if k != 0:
                return Action(ag.TURN_LEFT) if k > 0 else Action(ag.TURN_RIGHT)
            # inflation keeps walk goals a little off the destination; close
            # the last stretch before dropping
            if (not (self.nudging and blocked) and self.nudge_count < 2
                    and obs.pose.distance_to(self.dest_center) > 0.85):
                self.nudging = True
                self.nudge_count += 1
                return Action(ag.MOVE_FORWARD)
            self.phase = "done"
            return Action(ag.PLACE)

        if self.phase == "done":
            return Action(ag.STOP)
        return self._wander()


POLICIES = {
    RandomPolicy.name: RandomPolicy,
    FrontierPolicy.name: FrontierPolicy,
    OraclePolicy.name: OraclePolicy,
    QueryingPolicy.name: QueryingPolicy,
}


def make_policy(name: str) -> Policy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}") from None

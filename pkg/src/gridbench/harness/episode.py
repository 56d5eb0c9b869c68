"""The deterministic episode loop: sense, decide, step, integrate, communicate."""

from __future__ import annotations

import random

from gridbench import agents as ag
from gridbench import mapping, tasks
from gridbench.agents import (
    Action,
    AgentState,
    MacroError,
    WorldState,
    resolve_walk_target,
    step,
    walk_macro,
)
from gridbench.interaction import Administrator, Query, Reply
from gridbench.mapping import BeliefMap, SceneGraph, ground_truth_graph, merge
from gridbench.policies import PolicyContext, make_policy
from gridbench.sensing import Observation, Pose, raycast
from gridbench.tasks import EpisodeResult

MAX_REDECIDES_PER_TICK = 4


class EpisodeError(RuntimeError):
    pass


class AgentRuntime:
    def __init__(self, agent_id, spawn_cell, scene, policy, prior):
        x, y = scene.grid.cell_center(spawn_cell)
        self.id = agent_id
        self.state = AgentState(id=agent_id, pose=Pose(x, y, 0.0))
        if prior == "full":
            self.belief = BeliefMap.full(scene, owner=agent_id)
        else:
            self.belief = BeliefMap.empty(scene, owner=agent_id)
        self.graph = SceneGraph(scene_id=scene.id, owner=agent_id)
        self.policy = policy
        self.queue: list = []
        self.inbox: list = []
        self.stopped = False
        self.last_outcome: str | None = None
        self.path_m = 0.0

    # exchange_if_in_range mutates .belief/.graph through this surface
    @property
    def pose(self):
        return self.state.pose


def _spawn_agents(cfg, scene, task, seed, policy_factory):
    rng = random.Random(seed)
    cells = tasks.spawn_cells(scene, cfg.planning.inflation_radius)
    if not cells:
        raise EpisodeError("scene has no spawnable cells")
    used = set()
    assigned = task.goal.get("assigned_agent", "robot0")
    prior = cfg.effective_prior()
    agents = []
    for i in range(cfg.n_agents):
        aid = f"robot{i}"
        if aid == assigned and task.start is not None:
            cell = task.start
        else:
            free = [c for c in cells if c not in used]
            cell = rng.choice(free) if free else cells[0]
        used.add(cell)
        agents.append(AgentRuntime(aid, cell, scene, policy_factory(i), prior))
    return agents


def _make_admin(cfg, scene):
    if cfg.effective_comm_mode() != "hierarchical":
        return None
    if cfg.admin_graph == "ground_truth":
        graph = ground_truth_graph(scene)
    else:
        import json

        with open(cfg.admin_graph) as f:
            graph = SceneGraph.from_dict(json.load(f))
        if graph.scene_id != scene.id:
            raise EpisodeError(
                f"administrator graph is for scene {graph.scene_id!r}, not {scene.id!r}"
            )
    return Administrator(graph=graph, query_budget_per_agent=cfg.comm.query_budget)


def _expand_macro(agent, action, cfg):
    if action.kind == ag.WALK:
        return walk_macro(agent.state, action.target, agent.belief,
                          graph=agent.graph,
                          inflation_radius=cfg.planning.inflation_radius)
    # pick macro: walk to the believed object location, then pick
    target = action.object_id or action.target
    _cell, node = resolve_walk_target(target, agent.graph)
    center_cell = agent.belief.grid.cell_of(*node.center) if node else _cell
    acts = walk_macro(agent.state, center_cell, agent.belief,
                      graph=agent.graph,
                      inflation_radius=cfg.planning.inflation_radius)
    return acts + [Action(ag.PICK, object_id=action.object_id)]


def run_episode(cfg, scene, task, seed, policy_factory=None):
    """Run one episode; returns (EpisodeResult, log_lines).

    Identical (config, scene, task, seed) inputs produce identical logs.
    """
    if policy_factory is None:
        def policy_factory(i):
            return make_policy(cfg.policy_for(i))

    world = WorldState(scene)
    budget = cfg.effective_budget()
    sensor_cfg = cfg.sensor_config()
    comm_mode = cfg.effective_comm_mode()
    admin = _make_admin(cfg, scene)
    agents = _spawn_agents(cfg, scene, task, seed, policy_factory)
    for a in agents:
        world.agent_cells[a.id] = a.state.pose.cell(world.resolution)

    context = PolicyContext(
        scene=scene,
        inflation_radius=cfg.planning.inflation_radius,
        min_frontier_size=cfg.planning.min_frontier_size,
        adhesion_range_m=cfg.agents.adhesion_range_m,
        place_radius_m=cfg.agents.place_radius_m,
        extras={"grid": {"width": scene.grid.width, "height": scene.grid.height,
                         "resolution": scene.resolution,
                         "scene_id": scene.id}},
    )
    for i, a in enumerate(agents):
        a.policy.reset(task, seed * 1000 + i, a.id, context)

    lines = [{
        "type": "header",
        "protocol": 1,
        "config_hash": cfg.config_hash(),
        "scene_id": scene.id,
        "benchmark": cfg.benchmark,
        "task": task.to_dict(),
        "seed": seed,
        "agents": [a.id for a in agents],
        "spawns": {a.id: [a.state.pose.x, a.state.pose.y, a.state.pose.heading]
                   for a in agents},
        "params": {
            "adhesion_range_m": cfg.agents.adhesion_range_m,
            "place_radius_m": cfg.agents.place_radius_m,
            "budget": budget,
        },
    }]

    failure_diag = None
    tick = 0
    while tick < budget:
        live = [a for a in agents
                if not a.stopped and a.state.steps_taken < budget]
        if not live:
            break
        for a in agents:
            if a.stopped or a.state.steps_taken >= budget:
                continue
            messages = list(a.inbox)
            a.inbox.clear()
            cells, objs = raycast(world.grid, world.objects, a.state.pose, sensor_cfg)
            obs = Observation(step=tick, pose=a.state.pose, visible_cells=cells,
                              visible_objects=objs, messages_in=messages,
                              carried_object=a.state.carried,
                              last_outcome=a.last_outcome)
            mapping.integrate(a.belief, a.graph, obs, scene,
                              fusion_radius=cfg.fusion_radius_m)

            executed = None
            if not a.queue:
                for _ in range(MAX_REDECIDES_PER_TICK):
                    try:
                        decision = a.policy.decide(obs, a.belief, a.graph)
                    except BridgeFailure as e:
                        failure_diag = str(e)
                        decision = Action(ag.STOP)
                    if decision.kind in ag.MACROS:
                        try:
                            expansion = _expand_macro(a, decision, cfg)
                        except MacroError:
                            a.state.steps_taken += 1
                            a.state.action_log.append((decision, ag.MACRO_FAILED))
                            a.last_outcome = ag.MACRO_FAILED
                            executed = (decision, ag.MACRO_FAILED)
                            break
                        if not expansion:
                            a.last_outcome = ag.OK
                            obs.last_outcome = ag.OK
                            continue
                        a.queue = expansion
                        break
                    else:
                        a.queue = [decision]
                        break
                else:
                    a.queue = [Action(ag.STOP)]
            if executed is None and a.queue:
                act = a.queue.pop(0)
                before = a.state.pose
                outcome = step(world, a.state, act,
                               adhesion_range=cfg.agents.adhesion_range_m,
                               placement_radius=cfg.agents.place_radius_m)
                a.path_m += before.distance_to((a.state.pose.x, a.state.pose.y))
                a.last_outcome = outcome
                if act.kind == ag.STOP:
                    a.stopped = True
                elif act.kind == ag.ASK:
                    _route_query(a, act, admin)
                if outcome == ag.BLOCKED:
                    a.queue.clear()
                executed = (act, outcome)
            if executed is not None:
                act, outcome = executed
                lines.append({
                    "type": "step",
                    "tick": tick,
                    "agent": a.id,
                    "pose": [a.state.pose.x, a.state.pose.y, a.state.pose.heading],
                    "action": act.to_dict(),
                    "outcome": outcome,
                    "messages_in": messages,
                })
        _comm_sync(agents, comm_mode, cfg)
        tick += 1

    result = _finish(cfg, world, scene, task, agents, budget, failure_diag)
    lines.append({"type": "footer", "result": result.to_dict()})
    return result, lines


class BridgeFailure(RuntimeError):
    """External policy timeout/disconnect; the episode fails, the batch continues."""


def _route_query(agent, action, admin):
    q = action.query or {}
    query = Query(object_class=q.get("object_class", ""),
                  room_label=q.get("room_label"))
    if admin is None:
        agent.inbox.append(Reply(entries=(), refused=True).to_dict())
    else:
        agent.inbox.append(admin.answer(agent.id, query).to_dict())


def _comm_sync(agents, comm_mode, cfg):
    if comm_mode not in ("unlimited", "horizontal") or len(agents) < 2:
        return
    ordered = sorted(agents, key=lambda a: a.id)
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            if comm_mode == "horizontal":
                d = a.pose.distance_to((b.pose.x, b.pose.y))
                if d > cfg.comm.comm_range_m:
                    continue
            (ma, ga), _ = merge((a.belief, a.graph), (b.belief, b.graph),
                                fusion_radius=cfg.fusion_radius_m)
            (mb, gb), _ = merge((b.belief, b.graph), (a.belief, a.graph),
                                fusion_radius=cfg.fusion_radius_m)
            a.belief, a.graph = ma, ga
            b.belief, b.graph = mb, gb


def _finish(cfg, world, scene, task, agents, budget, failure_diag):
    agent_states = {a.id: a.state for a in agents}
    success = tasks.check_success(cfg.benchmark, world, agent_states, task,
                                  place_radius=cfg.agents.place_radius_m)
    if failure_diag is not None:
        success = False if success is not None else success
    assigned = task.goal.get("assigned_agent", "robot0")
    lead = next((a for a in agents if a.id == assigned), agents[0])

    extra = {}
    if cfg.benchmark == tasks.B3:
        merged_belief, merged_graph = agents[0].belief, agents[0].graph
        for other in agents[1:]:
            (merged_belief, merged_graph), _ = merge(
                (merged_belief, merged_graph), (other.belief, other.graph),
                fusion_radius=cfg.fusion_radius_m)
        from gridbench.metrics import compute_ser_mrmse

        ser, mrmse = compute_ser_mrmse(merged_graph, scene, cfg.match_radius_m)
        extra = {
            "ser": ser,
            "mrmse_m": mrmse,
            "known_cells": merged_belief.known_count(),
            "merged_graph": merged_graph.to_dict(),
        }
    if failure_diag is not None:
        extra["failure"] = failure_diag

    return EpisodeResult(
        task=task,
        success=bool(success) if success is not None else False,
        executed_path_m=lead.path_m,
        executed_actions=lead.state.steps_taken,
        final_distance_m=tasks.final_distance(world, agent_states, task),
        agents={
            a.id: {
                "steps": a.state.steps_taken,
                "path_m": a.path_m,
                "known_cells": a.belief.known_count(),
                "nodes": len(a.graph.object_nodes),
                "stopped": a.stopped,
            }
            for a in agents
        },
        extra=extra,
    )

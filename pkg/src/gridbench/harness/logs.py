"""Append-only JSONL episode logs and replay verification."""

from __future__ import annotations

import json

from gridbench import agents as ag
from gridbench.agents import Action, AgentState, WorldState, step
from gridbench.sensing import Pose


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_log(path, lines) -> None:
    with open(path, "w") as f:
        for line in lines:
            f.write(dumps(line))
            f.write("\n")


def read_log(path) -> list:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def log_header(lines) -> dict:
    if not lines or lines[0].get("type") != "header":
        raise ValueError("log has no header line")
    return lines[0]


def log_footer(lines) -> dict:
    if not lines or lines[-1].get("type") != "footer":
        raise ValueError("log has no footer line")
    return lines[-1]


def replay_terminal_state(lines, scene) -> dict:
    """Re-execute a log's actions against the scene and return the terminal
    per-agent poses. Raises when the log disagrees with re-execution
    (log completeness check)."""
    header = log_header(lines)
    if header["scene_id"] != scene.id:
        raise ValueError(
            f"log was recorded on scene {header['scene_id']!r}, not {scene.id!r}"
        )
    world = WorldState(scene)
    states = {}
    for aid, spawn in header["spawns"].items():
        x, y, h = spawn
        states[aid] = AgentState(id=aid, pose=Pose(x, y, h))
        world.agent_cells[aid] = states[aid].pose.cell(world.resolution)
    for rec in lines[1:-1]:
        if rec.get("type") != "step":
            continue
        aid = rec["agent"]
        state = states[aid]
        action = Action.from_dict(rec["action"])
        if action.kind in ag.MACROS:
            outcome = ag.MACRO_FAILED  # macro records are advisory; no pose change
        else:
            outcome = step(world, state, action,
                           adhesion_range=header["params"]["adhesion_range_m"],
                           placement_radius=header["params"]["place_radius_m"])
        if outcome != rec["outcome"]:
            raise ValueError(
                f"replay diverged at tick {rec['tick']} agent {aid}: "
                f"{outcome} != {rec['outcome']}"
            )
        pose = [state.pose.x, state.pose.y, state.pose.heading]
        if any(abs(a - b) > 1e-9 for a, b in zip(pose, rec["pose"])):
            raise ValueError(
                f"replay pose diverged at tick {rec['tick']} agent {aid}"
            )
    return {aid: (s.pose.x, s.pose.y, s.pose.heading) for aid, s in states.items()}

"""External policy bridge: newline-delimited JSON over stdio or local TCP."""

from __future__ import annotations

import json
import queue
import shlex
import socket
import subprocess
import threading

from gridbench import agents as ag
from gridbench.agents import Action
from gridbench.harness.episode import BridgeFailure
from gridbench.policies import Policy

PROTOCOL_VERSION = 1
LEGAL_ACTIONS = list(ag.PRIMITIVES + ag.MACROS)


class BridgeSession:
    """One line-oriented request/response channel to an external policy."""

    def __init__(self, endpoint: str, timeout_s: float = 30.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self._proc = None
        self._sock = None
        self._reader_q: queue.Queue = queue.Queue()
        self._open()

    def _open(self):
        if self.endpoint.startswith("cmd:"):
            cmd = shlex.split(self.endpoint[4:])
            self._proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
                bufsize=1)
            self._write = self._proc.stdin
            source = self._proc.stdout
        elif self.endpoint.startswith("tcp:"):
            host, port = self.endpoint[4:].rsplit(":", 1)
            server = socket.create_server((host, int(port)))
            server.settimeout(self.timeout_s)
            conn, _addr = server.accept()
            server.close()
            self._sock = conn
            rw = conn.makefile("rw", buffering=1)
            self._write = rw
            source = rw
        else:
            raise ValueError(f"bad bridge endpoint {self.endpoint!r}; "
                             "use cmd:<command> or tcp:<host>:<port>")

        def pump():
            try:
                for line in source:
                    self._reader_q.put(line)
            except Exception:
                pass
            self._reader_q.put(None)

        threading.Thread(target=pump, daemon=True).start()

    def send(self, message: dict) -> None:
        try:
            self._write.write(json.dumps(message, sort_keys=True) + "\n")
            self._write.flush()
        except (BrokenPipeError, OSError) as e:
            raise BridgeFailure(f"bridge write failed: {e}") from e

    def recv(self) -> dict:
        try:
            line = self._reader_q.get(timeout=self.timeout_s)
        except queue.Empty:
            raise BridgeFailure(
                f"bridge timeout after {self.timeout_s}s") from None
        if line is None:
            raise BridgeFailure("bridge client disconnected")
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise BridgeFailure(f"bridge sent invalid JSON: {e}") from e

    def close(self) -> None:
        try:
            self.send({"type": "end"})
        except BridgeFailure:
            pass
        if self._proc is not None:
            self._proc.terminate()
        if self._sock is not None:
            self._sock.close()


def observation_message(tick, agent_id, obs, belief, task) -> dict:
    from gridbench.grids import FREE

    return {
        "type": "decide",
        "protocol": PROTOCOL_VERSION,
        "tick": tick,
        "agent_id": agent_id,
        "task": task.to_dict() if task is not None else None,
        "observation": {
            "pose": [obs.pose.x, obs.pose.y, obs.pose.heading],
            "visible_cells": [
                [x, y, "F" if s == FREE else "O"]
                for ((x, y), s) in obs.visible_cells
            ],
            "visible_objects": [
                [oid, cls, [cx, cy]] for (oid, cls, (cx, cy)) in obs.visible_objects
            ],
            "messages": obs.messages_in,
            "carried": obs.carried_object,
            "last_outcome": obs.last_outcome,
        },
        "belief": {"known_cells": belief.known_count() if belief is not None else 0},
        "legal_actions": LEGAL_ACTIONS,
    }


class BridgePolicy(Policy):
    """Policy realized by an external process speaking the bridge protocol."""

    name = "bridge"

    def __init__(self, session: BridgeSession):
        self.session = session

    def reset(self, task, seed, agent_id, context):
        super().reset(task, seed, agent_id, context)
        grid_info = context.extras.get("grid", {})
        self.session.send({
            "type": "reset",
            "protocol": PROTOCOL_VERSION,
            "agent_id": agent_id,
            "seed": seed,
            "scene": grid_info,
            "task": task.to_dict() if task is not None else None,
            "params": {
                "inflation_radius": context.inflation_radius,
                "min_frontier_size": context.min_frontier_size,
            },
        })

    def decide(self, obs, belief, graph) -> Action:
        msg = observation_message(obs.step, self.agent_id, obs, belief, self.task)
        self.session.send(msg)
        resp = self.session.recv()
        if resp.get("type") != "action" or resp.get("tick") != obs.step:
            self.session.send({"type": "error",
                               "detail": "expected action for current tick"})
            return Action(ag.STOP)
        try:
            return Action.from_dict(resp.get("action") or {})
        except ValueError as e:
            self.session.send({"type": "error", "detail": str(e)})
            return Action(ag.STOP)


def policy_factory(cfg):
    """Per-agent persistent bridge sessions for `bridge:` policy bindings."""
    from gridbench.policies import make_policy

    sessions: dict = {}

    def factory(i: int):
        name = cfg.policy_for(i)
        if not name.startswith("bridge:"):
            return make_policy(name)
        if i not in sessions:
            sessions[i] = BridgeSession(name[len("bridge:"):],
                                        timeout_s=cfg.bridge_timeout_s)
        return BridgePolicy(sessions[i])

    factory.sessions = sessions
    return factory


def bridge_check(endpoint: str, timeout_s: float = 30.0) -> list:
    """Protocol conformance probe for an external client. Returns a list of
    (check, passed, detail) tuples."""
    from gridbench.sensing import Observation, Pose
    from gridbench.tasks import B3, EXPLORE_INSTRUCTION, Task

    checks = []
    task = Task(benchmark=B3, instruction=EXPLORE_INSTRUCTION, goal={},
                start=(1, 1), seed=0)
    try:
        session = BridgeSession(endpoint, timeout_s=timeout_s)
    except Exception as e:
        return [("connect", False, str(e))]
    checks.append(("connect", True, endpoint))
    try:
        session.send({
            "type": "reset", "protocol": PROTOCOL_VERSION, "agent_id": "robot0",
            "seed": 0,
            "scene": {"width": 8, "height": 8, "resolution": 0.25,
                      "scene_id": "bridge-check"},
            "task": task.to_dict(),
            "params": {"inflation_radius": 1, "min_frontier_size": 1},
        })
        for tick in range(3):
            obs = Observation(
                step=tick, pose=Pose(0.375, 0.375, 0.0),
                visible_cells=[((1, 1), 0), ((2, 1), 0), ((3, 1), 1)],
                visible_objects=[], messages_in=[], carried_object=None,
                last_outcome=None)
            session.send(observation_message(tick, "robot0", obs, None, task))
            resp = session.recv()
            ok = resp.get("type") == "action" and resp.get("tick") == tick
            checks.append((f"tick-{tick}-response", ok, json.dumps(resp)))
            if ok:
                try:
                    Action.from_dict(resp.get("action") or {})
                    checks.append((f"tick-{tick}-action-valid", True, ""))
                except ValueError as e:
                    checks.append((f"tick-{tick}-action-valid", False, str(e)))
    except BridgeFailure as e:
        checks.append(("session", False, str(e)))
    finally:
        session.close()
    return checks

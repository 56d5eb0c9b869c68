"""Protocol-level tests for the standalone bridge client executable."""

import json
import subprocess
import sys

import pytest

from bridge_client.llm import LLMPolicy

CLIENT = [sys.executable, "-m", "bridge_client"]

RESET = {
    "type": "reset", "protocol": 1, "agent_id": "robot0", "seed": 0,
    "scene": {"width": 8, "height": 8, "resolution": 0.25},
    "task": None,
    "params": {"inflation_radius": 1, "min_frontier_size": 1},
}


def run_client(lines, timeout=20):
    feed = "\n".join(json.dumps(m) if isinstance(m, dict) else m
                     for m in lines) + "\n"
    return subprocess.run(CLIENT, input=feed, capture_output=True,
                          text=True, timeout=timeout)


def test_end_message_exits_zero():
    proc = run_client([RESET, {"type": "end"}])
    assert proc.returncode == 0


def test_decide_gets_one_action_per_tick():
    decide = {
        "type": "decide", "protocol": 1, "tick": 0, "agent_id": "robot0",
        "task": None,
        "observation": {
            "pose": [0.375, 0.375, 0.0],
            "visible_cells": [[1, 1, "F"], [2, 1, "F"], [3, 1, "O"]],
            "visible_objects": [], "messages": [], "carried": None,
            "last_outcome": None,
        },
    }
    ticks = [dict(decide, tick=t) for t in range(3)]
    proc = run_client([RESET, *ticks, {"type": "end"}])
    assert proc.returncode == 0
    replies = [json.loads(line) for line in proc.stdout.splitlines()]
    assert [r["tick"] for r in replies] == [0, 1, 2]
    for r in replies:
        assert r["type"] == "action"
        assert r["action"]["kind"] in {"move_forward", "turn_left",
                                       "turn_right", "stop"}


def test_protocol_mismatch_exits_nonzero():
    proc = run_client([dict(RESET, protocol=99)])
    assert proc.returncode != 0
    assert "protocol mismatch" in proc.stderr


def test_malformed_server_message_diagnoses_and_exits():
    proc = run_client([RESET, "{not json"])
    assert proc.returncode != 0
    assert "malformed" in proc.stderr


def test_unknown_message_type_is_ignored():
    proc = run_client([RESET, {"type": "telemetry"}, {"type": "end"}])
    assert proc.returncode == 0
    assert "telemetry" in proc.stderr


def test_server_error_message_logged_not_fatal():
    proc = run_client([RESET, {"type": "error", "detail": "boom"},
                       {"type": "end"}])
    assert proc.returncode == 0
    assert "boom" in proc.stderr


def test_bad_endpoint_flag_exits_nonzero():
    proc = subprocess.run(CLIENT + ["--endpoint", "carrier-pigeon"],
                          capture_output=True, text=True, timeout=20)
    assert proc.returncode != 0
    assert "error" in proc.stderr


def test_llm_stub_is_explicitly_unimplemented():
    policy = LLMPolicy(model="some-model")
    prompt = policy.build_prompt({"task": {"instruction": "find a mug"},
                                  "observation": {"pose": [1, 1, 0]}})
    assert "find a mug" in prompt
    with pytest.raises(NotImplementedError):
        policy.decide({})

"""NDJSON bridge client: single-threaded request/response loop.

Speaks the harness wire protocol (version 1): reads `reset` / `decide` /
`end` messages, answers each `decide` with exactly one `action` message
referencing the request's tick. Runs over standard streams (the harness
spawns this executable) or an outbound TCP connection (the harness listens).
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from bridge_client.frontier import FrontierExplorer

PROTOCOL_VERSION = 1


class ProtocolError(RuntimeError):
    pass


def _open_streams(endpoint: str):
    if endpoint == "stdio":
        return sys.stdin, sys.stdout, None
    if endpoint.startswith("tcp:"):
        host, port = endpoint[4:].rsplit(":", 1)
        sock = socket.create_connection((host, int(port)))
        rw = sock.makefile("rw", buffering=1)
        return rw, rw, sock
    raise ProtocolError(f"bad endpoint {endpoint!r}; use stdio or tcp:<host>:<port>")


def _reply(out, message: dict) -> None:
    out.write(json.dumps(message, sort_keys=True) + "\n")
    out.flush()


def handle_message(msg: dict, state: dict):
    """Process one server message; returns a reply dict, None, or "end"."""
    kind = msg.get("type")
    if kind == "end":
        return "end"
    if kind == "error":
        print(f"server error: {msg.get('detail')}", file=sys.stderr)
        return None
    if kind == "reset":
        proto = msg.get("protocol")
        if proto != PROTOCOL_VERSION:
            raise ProtocolError(
                f"protocol mismatch: server speaks {proto}, "
                f"client speaks {PROTOCOL_VERSION}")
        state["policy"] = FrontierExplorer.from_reset(msg)
        return None
    if kind == "decide":
        tick = msg.get("tick")
        policy = state.get("policy")
        if policy is None:
            # never reset (e.g. a conformance probe): fall back to a
            # grid-less policy that still answers every tick
            action = "turn_left"
        else:
            action = policy.decide(msg["observation"])
        return {"type": "action", "tick": tick, "action": {"kind": action}}
    print(f"ignoring unknown message type {kind!r}", file=sys.stderr)
    return None


def client_loop(endpoint: str = "stdio") -> int:
    """Serve one session; returns a process exit status."""
    try:
        source, out, sock = _open_streams(endpoint)
    except (OSError, ProtocolError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    state: dict = {}
    try:
        for line in source:
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as e:
                print(f"error: malformed server message: {e}", file=sys.stderr)
                return 1
            try:
                reply = handle_message(msg, state)
            except ProtocolError as e:
                print(f"error: {e}", file=sys.stderr)
                return 1
            if reply == "end":
                return 0
            if reply is not None:
                _reply(out, reply)
        return 0
    except (BrokenPipeError, OSError):
        return 0  # server went away between episodes; a clean finish
    finally:
        if sock is not None:
            sock.close()


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="gridbench-policy-client",
        description="Reference frontier-exploration client for the "
                    "gridbench policy bridge")
    p.add_argument("--endpoint", default="stdio",
                   help="stdio (default) or tcp:<host>:<port> to connect to")
    args = p.parse_args(argv)
    return client_loop(args.endpoint)


if __name__ == "__main__":
    sys.exit(main())

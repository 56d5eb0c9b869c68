"""Command-line entry point (`gridbench <subcommand>`)."""

from __future__ import annotations

import argparse
import json
import sys

from gridbench import tasks as tasklib
from gridbench.harness import logs as loglib
from gridbench.harness.config import RunConfig, SceneSettings
from gridbench.world import SceneGenConfig, generate_scene, load_scene, save_scene


def _cfg_from_args(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig(benchmark=args.benchmark or tasklib.B1)
    if args.benchmark:
        cfg.benchmark = args.benchmark
    if args.policy:
        cfg.policy = args.policy
    if args.scene:
        cfg.scene = SceneSettings(file=args.scene)
    if args.seeds:
        cfg.seeds = args.seeds
    if args.n_agents is not None:
        cfg.n_agents = args.n_agents
    if args.tasks is not None:
        cfg.tasks_per_scene = args.tasks
    if args.budget is not None:
        cfg.budget = args.budget
    if args.out:
        cfg.output_dir = args.out
    return cfg


def cmd_gen_scene(args) -> int:
    gen = SceneGenConfig(width=args.width, height=args.height,
                         resolution=args.resolution, min_rooms=args.min_rooms,
                         max_rooms=args.max_rooms, n_objects=args.objects)
    scene = generate_scene(gen, args.seed)
    save_scene(scene, args.out)
    print(f"wrote {args.out}: {scene.id} "
          f"({len(scene.rooms)} rooms, {len(scene.objects)} objects)")
    if args.png:
        from gridbench.harness.render import render_scene

        render_scene(scene).save(args.png, format="PNG")
        print(f"wrote {args.png}")
    return 0


def cmd_gen_tasks(args) -> int:
    scene = load_scene(args.scene)
    out = tasklib.generate_tasks(scene, args.benchmark, args.count, args.seed,
                                 n_agents=args.n_agents)
    with open(args.out, "w") as f:
        for t in out:
            f.write(loglib.dumps(t.to_dict()) + "\n")
    print(f"wrote {args.out}: {len(out)} {args.benchmark} tasks")
    return 0


def cmd_run(args) -> int:
    from gridbench.harness.suite import run_suite

    cfg = _cfg_from_args(args)
    report, results = run_suite(cfg, out_dir=cfg.output_dir)
    print(loglib.dumps(report.to_dict()))
    failed = [r for r in results if "failure" in r.extra]
    if failed:
        print(f"{len(failed)}/{len(results)} episodes failed", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    from gridbench.harness.suite import eval_logs

    report = eval_logs(args.log_dir, args.benchmark, budget=args.budget)
    print(loglib.dumps(report.to_dict()))
    return 0


def cmd_replay(args) -> int:
    from gridbench.harness.logs import read_log, replay_terminal_state

    scene = load_scene(args.scene)
    lines = read_log(args.log)
    terminal = replay_terminal_state(lines, scene)
    print(loglib.dumps({aid: list(p) for aid, p in sorted(terminal.items())}))
    if args.png:
        from gridbench.harness.render import render_log

        render_log(lines, scene, args.png)
        print(f"wrote {args.png}")
    return 0


def cmd_bridge_check(args) -> int:
    from gridbench.harness.bridge import bridge_check

    checks = bridge_check(args.endpoint, timeout_s=args.timeout)
    ok = True
    for name, passed, detail in checks:
        status = "PASS" if passed else "FAIL"
        ok = ok and passed
        suffix = f"  {detail}" if detail and not passed else ""
        print(f"[{status}] {name}{suffix}")
    print("bridge-check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridbench",
        description="Deterministic semantic-gridworld robot benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-scene", help="generate a scene file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--width", type=int, default=48)
    g.add_argument("--height", type=int, default=48)
    g.add_argument("--resolution", type=float, default=0.25)
    g.add_argument("--min-rooms", type=int, default=3)
    g.add_argument("--max-rooms", type=int, default=5)
    g.add_argument("--objects", type=int, default=10)
    g.add_argument("--png", help="also render a PNG preview")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_scene)

    t = sub.add_parser("gen-tasks", help="generate tasks for a scene")
    t.add_argument("--scene", required=True)
    t.add_argument("--benchmark", required=True, choices=tasklib.BENCHMARKS)
    t.add_argument("--count", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--n-agents", type=int, default=1)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_gen_tasks)

    r = sub.add_parser("run", help="run a benchmark suite")
    r.add_argument("--config", help="YAML run configuration")
    r.add_argument("--benchmark", choices=tasklib.BENCHMARKS)
    r.add_argument("--policy",
                   help="policy name or bridge:<endpoint> binding")
    r.add_argument("--scene", help="scene file (overrides generator settings)")
    r.add_argument("--seeds", type=int, nargs="+")
    r.add_argument("--n-agents", type=int)
    r.add_argument("--tasks", type=int, help="tasks per scene")
    r.add_argument("--budget", type=int)
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="recompute metrics from episode logs")
    e.add_argument("--log-dir", required=True)
    e.add_argument("--benchmark", required=True, choices=tasklib.BENCHMARKS)
    e.add_argument("--budget", type=int)
    e.set_defaults(func=cmd_eval)

    rp = sub.add_parser("replay", help="verify a log and optionally render it")
    rp.add_argument("--log", required=True)
    rp.add_argument("--scene", required=True)
    rp.add_argument("--png", help="write trajectory rendering here")
    rp.set_defaults(func=cmd_replay)

    b = sub.add_parser("bridge-check",
                       help="probe an external policy for protocol conformance")
    b.add_argument("--endpoint", required=True,
                   help="cmd:<command line> or tcp:<host>:<port>")
    b.add_argument("--timeout", type=float, default=30.0)
    b.set_defaults(func=cmd_bridge_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Suite execution: all (scene x task x seed) episodes plus metric artifacts."""

from __future__ import annotations

import csv
import os

from gridbench import tasks as tasklib
from gridbench.harness import logs as loglib
from gridbench.harness.episode import run_episode
from gridbench.metrics import MetricsReport, compute_mpl_lpl, compute_sr_spl_ne
from gridbench.tasks import EpisodeResult, Task
from gridbench.world import generate_scene, load_scene, save_scene

CSV_COLUMNS = ("benchmark", "policy", "n_episodes", "sr", "spl", "ne_m",
               "ser", "mrmse_m", "mpl", "lpl")


def _scenes(cfg):
    if cfg.scene.file:
        yield load_scene(cfg.scene.file)
        return
    gen = cfg.scene.gen_config()
    for s in cfg.scene.seeds:
        yield generate_scene(gen, s)


def aggregate(cfg, results) -> MetricsReport:
    """Order-independent aggregation of episode results into one report."""
    results = sorted(results, key=lambda r: (r.task.benchmark, r.task.seed,
                                             r.task.instruction, r.executed_actions))
    report = MetricsReport(n_episodes=len(results))
    if not results:
        return report
    benchmark = cfg.benchmark
    if benchmark != tasklib.B3:
        sr, spl, ne = compute_sr_spl_ne(results)
        report.sr, report.spl, report.ne_m = sr, spl, ne
        mpl, lpl = compute_mpl_lpl(results, budget=cfg.effective_budget())
        report.mpl, report.lpl = mpl, lpl
    else:
        sers = [r.extra.get("ser", 0.0) for r in results]
        report.ser = sum(sers) / len(sers)
        mrmses = [r.extra["mrmse_m"] for r in results
                  if r.extra.get("mrmse_m") is not None]
        report.mrmse_m = sum(mrmses) / len(mrmses) if mrmses else None
        mpl, lpl = compute_mpl_lpl(results, budget=cfg.effective_budget())
        report.mpl, report.lpl = mpl, lpl
    return report


def run_suite(cfg, out_dir=None, policy_factory=None):
    """Execute the whole suite; writes JSONL logs, metrics.csv, summary.json.

    Returns (MetricsReport, results). Episode failures are recorded, never
    abort the batch."""
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    own_sessions = False
    if policy_factory is None and any(
            cfg.policy_for(i).startswith("bridge:") for i in range(cfg.n_agents)):
        from gridbench.harness import bridge
        policy_factory = bridge.policy_factory(cfg)
        own_sessions = True
    try:
        return _run_suite(cfg, out_dir, policy_factory)
    finally:
        if own_sessions:
            for session in policy_factory.sessions.values():
                session.close()


def _run_suite(cfg, out_dir, policy_factory):
    results = []
    for scene in _scenes(cfg):
        scene_path = os.path.join(out_dir, f"{scene.id}.scene.json")
        save_scene(scene, scene_path)
        suite_tasks = tasklib.generate_tasks(
            scene, cfg.benchmark, cfg.tasks_per_scene, cfg.task_seed,
            n_agents=cfg.n_agents,
            inflation_radius=cfg.planning.inflation_radius)
        task_path = os.path.join(out_dir, f"{scene.id}.tasks.jsonl")
        with open(task_path, "w") as f:
            for t in suite_tasks:
                f.write(loglib.dumps(t.to_dict()) + "\n")
        for ti, task in enumerate(suite_tasks):
            for seed in cfg.seeds:
                try:
                    result, lines = run_episode(cfg, scene, task, seed,
                                                policy_factory=policy_factory)
                except Exception as e:  # partial failure, recorded
                    result = EpisodeResult(
                        task=task, success=False, executed_path_m=0.0,
                        executed_actions=cfg.effective_budget(),
                        final_distance_m=None,
                        extra={"failure": f"{type(e).__name__}: {e}"})
                    lines = [{"type": "header", "scene_id": scene.id,
                              "task": task.to_dict(), "seed": seed,
                              "error": str(e)},
                             {"type": "footer", "result": result.to_dict()}]
                name = f"{scene.id}_t{ti:03d}_s{seed}.jsonl"
                loglib.write_log(os.path.join(out_dir, name), lines)
                results.append(result)

    report = aggregate(cfg, results)
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        row = {"benchmark": cfg.benchmark, "policy": cfg.policy}
        row.update({k: v for k, v in report.to_dict().items() if k in CSV_COLUMNS})
        w.writerow(row)
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        f.write(loglib.dumps({
            "config_hash": cfg.config_hash(),
            "benchmark": cfg.benchmark,
            "policy": cfg.policy,
            "report": report.to_dict(),
        }) + "\n")
    return report, results


def eval_logs(log_dir, benchmark, budget=None) -> MetricsReport:
    """Recompute a MetricsReport from persisted episode logs."""
    results = []
    for name in sorted(os.listdir(log_dir)):
        if not name.endswith(".jsonl") or name.endswith(".tasks.jsonl"):
            continue
        lines = loglib.read_log(os.path.join(log_dir, name))
        footer = loglib.log_footer(lines)
        d = footer["result"]
        results.append(EpisodeResult(
            task=Task.from_dict(d["task"]),
            success=d["success"],
            executed_path_m=d["executed_path_m"],
            executed_actions=d["executed_actions"],
            final_distance_m=d.get("final_distance_m"),
            agents=d.get("agents", {}),
            extra=d.get("extra", {}),
        ))
    report = MetricsReport(n_episodes=len(results))
    if not results:
        return report
    if benchmark != tasklib.B3:
        report.sr, report.spl, report.ne_m = compute_sr_spl_ne(results)
    else:
        sers = [r.extra.get("ser", 0.0) for r in results]
        report.ser = sum(sers) / len(sers)
        mrmses = [r.extra["mrmse_m"] for r in results
                  if r.extra.get("mrmse_m") is not None]
        report.mrmse_m = sum(mrmses) / len(mrmses) if mrmses else None
    report.mpl, report.lpl = compute_mpl_lpl(results, budget=budget)
    return report

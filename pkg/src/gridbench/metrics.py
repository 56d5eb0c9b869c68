"""Benchmark metrics: SR, SPL, NE, SER, MRMSE, MPL, LPL."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_MATCH_RADIUS_M = 2.0


class MetricsError(ValueError):
    pass


@dataclass
class MetricsReport:
    sr: float | None = None
    spl: float | None = None
    ne_m: float | None = None
    ser: float | None = None
    mrmse_m: float | None = None
    mpl: int | None = None
    lpl: int | None = None
    n_episodes: int = 0

    def to_dict(self) -> dict:
        return {
            "sr": self.sr, "spl": self.spl, "ne_m": self.ne_m,
            "ser": self.ser, "mrmse_m": self.mrmse_m,
            "mpl": self.mpl, "lpl": self.lpl, "n_episodes": self.n_episodes,
        }


def compute_sr_spl_ne(results) -> tuple:
    """SR = successes/N; SPL = (1/N) sum S_i * l_i / max(p_i, l_i);
    NE = mean final distance to the nearest matching target."""
    results = list(results)
    if not results:
        raise MetricsError("no episode results")
    n = len(results)
    sr = sum(1 for r in results if r.success) / n
    spl = 0.0
    for r in results:
        if not r.success:
            continue
        l = r.task.shortest_path_m
        p = r.executed_path_m
        spl += l / max(p, l) if max(p, l) > 0 else 1.0
    spl /= n
    nes = [r.final_distance_m for r in results if r.final_distance_m is not None]
    ne = sum(nes) / len(nes) if nes else 0.0
    return sr, spl, ne


def match_instances(graph, scene, match_radius: float = DEFAULT_MATCH_RADIUS_M):
    """Per-class optimal assignment between graph nodes and ground-truth
    instances, minimizing total squared center distance; pairs beyond the
    match radius are dropped as false positives.

    Returns (pairs, unmatched) with pairs = [(node_id, object_id, distance_m)].
    """
    nodes_by_class: dict = {}
    for node in graph.object_nodes:
        nodes_by_class.setdefault(node.class_label, []).append(node)
    objs_by_class: dict = {}
    for obj in scene.objects:
        objs_by_class.setdefault(obj.class_label, []).append(obj)

    pairs = []
    matched_nodes = set()
    matched_objs = set()
    for cls in sorted(set(nodes_by_class) & set(objs_by_class)):
        nodes = sorted(nodes_by_class[cls], key=lambda n: n.id)
        objs = sorted(objs_by_class[cls], key=lambda o: o.id)
        cost = np.empty((len(nodes), len(objs)))
        for i, n in enumerate(nodes):
            nx, ny = n.center
            for j, o in enumerate(objs):
                cost[i, j] = (nx - o.center[0]) ** 2 + (ny - o.center[1]) ** 2
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            d = math.sqrt(cost[i, j])
            if d <= match_radius:
                pairs.append((nodes[i].id, objs[j].id, d))
                matched_nodes.add(nodes[i].id)
                matched_objs.add(objs[j].id)
    unmatched = {
        "nodes": sorted(n.id for n in graph.object_nodes if n.id not in matched_nodes),
        "objects": sorted(o.id for o in scene.objects if o.id not in matched_objs),
    }
    return sorted(pairs), unmatched


def compute_ser_mrmse(graph, scene, match_radius: float = DEFAULT_MATCH_RADIUS_M):
    """SER = matched / ground-truth instance count; MRMSE = RMS of matched
    center distances (None when nothing matched)."""
    if not scene.objects:
        return 0.0, None
    pairs, _ = match_instances(graph, scene, match_radius)
    ser = len(pairs) / len(scene.objects)
    if not pairs:
        return ser, None
    mrmse = math.sqrt(sum(d * d for (_n, _o, d) in pairs) / len(pairs))
    return ser, mrmse


def compute_mpl_lpl(results, budget: int | None = None) -> tuple:
    """Min and max executed primitive-action counts; capped at the budget."""
    results = list(results)
    if not results:
        raise MetricsError("no episode results")
    counts = [r.executed_actions for r in results]
    if budget is not None:
        counts = [min(c, budget) for c in counts]
    return min(counts), max(counts)

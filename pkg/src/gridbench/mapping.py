"""Per-agent belief maps, scene-graph construction, and map/graph merging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from gridbench.grids import UNKNOWN, OccupancyGrid

DEFAULT_FUSION_RADIUS_M = 0.5


class MergeError(ValueError):
    pass


@dataclass
class GraphNode:
    id: str
    class_label: str
    center_sum: tuple  # running sum of measurements (sx, sy)
    observation_count: int
    first_seen: int
    last_seen: int
    room_id: str | None = None

    @property
    def center(self) -> tuple:
        return (self.center_sum[0] / self.observation_count,
                self.center_sum[1] / self.observation_count)


@dataclass
class SceneGraph:
    scene_id: str
    owner: str = ""
    object_nodes: list = field(default_factory=list)
    room_nodes: list = field(default_factory=list)   # [(room_id, label)]
    next_seq: int = 0

    def node_by_id(self, node_id: str) -> GraphNode:
        for n in self.object_nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def nodes_of_class(self, class_label: str) -> list:
        return sorted((n for n in self.object_nodes if n.class_label == class_label),
                      key=lambda n: n.id)

    def edges(self) -> dict:
        """Containment edges (node -> room) plus room adjacency placeholders."""
        containment = sorted(
            (n.id, n.room_id) for n in self.object_nodes if n.room_id is not None
        )
        return {"containment": containment}

    def copy(self) -> "SceneGraph":
        return SceneGraph(
            scene_id=self.scene_id,
            owner=self.owner,
            object_nodes=[replace(n) for n in self.object_nodes],
            room_nodes=list(self.room_nodes),
            next_seq=self.next_seq,
        )

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "owner": self.owner,
            "next_seq": self.next_seq,
            "object_nodes": [
                {
                    "id": n.id,
                    "class_label": n.class_label,
                    "center": list(n.center),
                    "center_sum": list(n.center_sum),
                    "observation_count": n.observation_count,
                    "first_seen": n.first_seen,
                    "last_seen": n.last_seen,
                    "room_id": n.room_id,
                }
                for n in sorted(self.object_nodes, key=lambda n: n.id)
            ],
            "room_nodes": sorted([list(r) for r in self.room_nodes]),
            "edges": self.edges(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneGraph":
        g = cls(scene_id=data["scene_id"], owner=data.get("owner", ""),
                next_seq=int(data.get("next_seq", 0)))
        for n in data["object_nodes"]:
            g.object_nodes.append(GraphNode(
                id=n["id"],
                class_label=n["class_label"],
                center_sum=tuple(n["center_sum"]),
                observation_count=int(n["observation_count"]),
                first_seen=int(n["first_seen"]),
                last_seen=int(n["last_seen"]),
                room_id=n.get("room_id"),
            ))
        g.room_nodes = [tuple(r) for r in data.get("room_nodes", [])]
        return g


@dataclass
class BeliefMap:
    grid: OccupancyGrid
    cell_stamps: np.ndarray
    owner: str
    scene_id: str

    @classmethod
    def empty(cls, scene, owner: str) -> "BeliefMap":
        g = OccupancyGrid(scene.grid.width, scene.grid.height, scene.resolution)
        stamps = np.full((g.height, g.width), -1, dtype=np.int64)
        return cls(grid=g, cell_stamps=stamps, owner=owner, scene_id=scene.id)

    @classmethod
    def full(cls, scene, owner: str) -> "BeliefMap":
        """Belief preloaded with the full ground-truth occupancy (known floor plan)."""
        g = scene.grid.copy()
        stamps = np.zeros((g.height, g.width), dtype=np.int64)
        return cls(grid=g, cell_stamps=stamps, owner=owner, scene_id=scene.id)

    def known_count(self) -> int:
        return self.grid.width * self.grid.height - self.grid.count(UNKNOWN)

    def known_mask(self) -> np.ndarray:
        return self.grid.cells != UNKNOWN

    def copy(self) -> "BeliefMap":
        return BeliefMap(grid=self.grid.copy(), cell_stamps=self.cell_stamps.copy(),
                         owner=self.owner, scene_id=self.scene_id)


@dataclass
class MergeReport:
    cells_gained: int
    nodes_added: int
    nodes_fused: int


def integrate(belief: BeliefMap, graph: SceneGraph, obs, scene,
              fusion_radius: float = DEFAULT_FUSION_RADIUS_M):
    """Fold one observation into the agent's belief map and scene graph.

    Revealed cells overwrite unknown; objects fuse into same-class nodes
    within the fusion radius (running-mean center) or open new nodes.
    """
    cells = belief.grid.cells
    stamps = belief.cell_stamps
    for (x, y), state in obs.visible_cells:
        cells[y, x] = state
        stamps[y, x] = obs.step

    for _oid, cls, (mx, my) in sorted(obs.visible_objects):
        best = None
        best_d = fusion_radius
        for n in graph.object_nodes:
            if n.class_label != cls:
                continue
            cx, cy = n.center
            d = math.hypot(cx - mx, cy - my)
            if d < best_d or (d == best_d and best is not None and n.id < best.id):
                best, best_d = n, d
        if best is not None:
            sx, sy = best.center_sum
            best.center_sum = (sx + mx, sy + my)
            best.observation_count += 1
            best.last_seen = obs.step
        else:
            best = GraphNode(
                id=f"{graph.owner}.{graph.next_seq:04d}",
                class_label=cls,
                center_sum=(mx, my),
                observation_count=1,
                first_seen=obs.step,
                last_seen=obs.step,
            )
            graph.next_seq += 1
            graph.object_nodes.append(best)
        _assign_room(best, belief, scene, graph)
    return belief, graph


def _assign_room(node: GraphNode, belief: BeliefMap, scene, graph: SceneGraph) -> None:
    cell = belief.grid.cell_of(*node.center)
    if not belief.grid.in_bounds(cell):
        return
    if belief.grid.state(cell) == UNKNOWN:
        return
    room = scene.room_of_cell(cell)
    if room is not None:
        node.room_id = room.id
        if (room.id, room.label) not in graph.room_nodes:
            graph.room_nodes.append((room.id, room.label))


def merge(a, b, fusion_radius: float = DEFAULT_FUSION_RADIUS_M):
    """Merge two (BeliefMap, SceneGraph) pairs into a new pair.

    Known beats unknown; known-known conflicts go to the newer stamp (tie:
    smaller state value). Nodes with equal ids dedupe; same-class nodes within
    the fusion radius fuse by observation-count-weighted mean under the
    lexicographically smaller id. Inputs are not mutated.
    """
    (map_a, graph_a), (map_b, graph_b) = a, b
    if map_a.scene_id != map_b.scene_id or graph_a.scene_id != graph_b.scene_id:
        raise MergeError(
            f"scene mismatch: {map_a.scene_id!r} vs {map_b.scene_id!r}"
        )

    out = map_a.copy()
    known_a = map_a.known_mask()
    known_b = map_b.known_mask()
    take_b = known_b & (~known_a | (map_b.cell_stamps > map_a.cell_stamps))
    out.grid.cells[take_b] = map_b.grid.cells[take_b]
    out.cell_stamps[take_b] = map_b.cell_stamps[take_b]
    tie = known_a & known_b & (map_a.cell_stamps == map_b.cell_stamps)
    out.grid.cells[tie] = np.minimum(map_a.grid.cells[tie], map_b.grid.cells[tie])
    cells_gained = out.known_count() - map_a.known_count()

    # dedupe by id: identical provenance, keep the more-observed copy
    by_id: dict = {}
    for n in list(graph_a.object_nodes) + list(graph_b.object_nodes):
        cur = by_id.get(n.id)
        if cur is None or (n.observation_count, n.last_seen) > (cur.observation_count, cur.last_seen):
            by_id[n.id] = n

    result_nodes: list = []
    fused = 0
    for n in sorted(by_id.values(), key=lambda n: n.id):
        n = replace(n)
        partner = None
        best_d = fusion_radius
        for r in result_nodes:
            if r.class_label != n.class_label:
                continue
            rx, ry = r.center
            nx, ny = n.center
            d = math.hypot(rx - nx, ry - ny)
            if d < best_d or (d == best_d and partner is not None and r.id < partner.id):
                partner, best_d = r, d
        if partner is None:
            result_nodes.append(n)
        else:
            partner.id = min(partner.id, n.id)
            partner.center_sum = (partner.center_sum[0] + n.center_sum[0],
                                  partner.center_sum[1] + n.center_sum[1])
            partner.observation_count += n.observation_count
            partner.first_seen = min(partner.first_seen, n.first_seen)
            partner.last_seen = max(partner.last_seen, n.last_seen)
            if partner.room_id is None:
                partner.room_id = n.room_id
            fused += 1

    out_graph = SceneGraph(
        scene_id=graph_a.scene_id,
        owner=graph_a.owner,
        object_nodes=sorted(result_nodes, key=lambda n: n.id),
        room_nodes=sorted(set(graph_a.room_nodes) | set(graph_b.room_nodes)),
        next_seq=max(graph_a.next_seq, graph_b.next_seq),
    )
    report = MergeReport(
        cells_gained=int(cells_gained),
        nodes_added=max(0, len(result_nodes) - len(graph_a.object_nodes)),
        nodes_fused=fused,
    )
    return (out, out_graph), report


def ground_truth_graph(scene) -> SceneGraph:
    """Oracle scene graph: every instance with its exact center and room."""
    g = SceneGraph(scene_id=scene.id, owner="oracle")
    for o in sorted(scene.objects, key=lambda o: o.id):
        g.object_nodes.append(GraphNode(
            id=o.id, class_label=o.class_label, center_sum=o.center,
            observation_count=1, first_seen=0, last_seen=0, room_id=o.room_id,
        ))
    g.room_nodes = sorted((r.id, r.label) for r in scene.rooms)
    g.next_seq = len(g.object_nodes)
    return g


def graph_coverage(graph: SceneGraph, scene) -> float:
    """Fraction of ground-truth object instances matched by graph nodes."""
    from gridbench.metrics import match_instances

    if not scene.objects:
        return 0.0
    pairs, _unmatched = match_instances(graph, scene)
    return len(pairs) / len(scene.objects)

"""Communication regimes: privileged administrator Q&A and peer exchange."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from gridbench.mapping import merge

HIERARCHICAL = "hierarchical"
HORIZONTAL = "horizontal"
NO_COMM = "none"

DEFAULT_COMM_RANGE_M = 3.0
DEFAULT_QUERY_BUDGET = 5
UNLIMITED = -1


@dataclass(frozen=True)
class Query:
    object_class: str
    room_label: str | None = None

    def to_dict(self):
        return {"type": "query", "object_class": self.object_class,
                "room_label": self.room_label}


@dataclass(frozen=True)
class Reply:
    entries: tuple  # of (class_label, (x, y), room_id or None)
    refused: bool = False

    def to_dict(self):
        return {
            "type": "reply",
            "refused": self.refused,
            "entries": [
                {"class_label": c, "center": list(p), "room_id": r}
                for (c, p, r) in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            entries=tuple((e["class_label"], tuple(e["center"]), e.get("room_id"))
                          for e in d.get("entries", [])),
            refused=bool(d.get("refused", False)),
        )


@dataclass
class CommConfig:
    mode: str = NO_COMM
    comm_range_m: float = DEFAULT_COMM_RANGE_M
    query_budget: int = DEFAULT_QUERY_BUDGET

    def __post_init__(self):
        if self.mode == HORIZONTAL and self.comm_range_m <= 0:
            raise ValueError("horizontal mode needs a positive comm range")


@dataclass
class Administrator:
    """Answers structured queries from its (possibly imperfect) scene graph;
    never fabricates entries absent from the graph."""

    graph: object
    query_budget_per_agent: int = DEFAULT_QUERY_BUDGET
    _spent: dict = field(default_factory=dict)

    def remaining_budget(self, agent_id: str) -> int:
        if self.query_budget_per_agent == UNLIMITED:
            return UNLIMITED
        return self.query_budget_per_agent - self._spent.get(agent_id, 0)

    def answer(self, agent_id: str, q: Query) -> Reply:
        if self.query_budget_per_agent != UNLIMITED:
            if self._spent.get(agent_id, 0) >= self.query_budget_per_agent:
                return Reply(entries=(), refused=True)
            self._spent[agent_id] = self._spent.get(agent_id, 0) + 1
        room_of_label = {rid: label for rid, label in self.graph.room_nodes}
        entries = []
        for n in self.graph.nodes_of_class(q.object_class):
            if q.room_label is not None:
                if n.room_id is None or room_of_label.get(n.room_id) != q.room_label:
                    continue
            entries.append((n.class_label, n.center, n.room_id))
        return Reply(entries=tuple(entries))


def admin_answer(admin: Administrator, agent_id: str, q: Query) -> Reply:
    return admin.answer(agent_id, q)


def exchange_if_in_range(a, b, cfg: CommConfig):
    """Symmetric belief/graph exchange between two agents when within comm
    range. `a` and `b` are objects exposing pose, belief, graph; on exchange
    both end with the merged map. Returns the two merge reports or None."""
    if cfg.mode != HORIZONTAL:
        return None
    d = math.hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y)
    if d > cfg.comm_range_m:
        return None
    (merged_a, graph_a), report_a = merge((a.belief, a.graph), (b.belief, b.graph))
    (merged_b, graph_b), report_b = merge((b.belief, b.graph), (a.belief, a.graph))
    a.belief, a.graph = merged_a, graph_a
    b.belief, b.graph = merged_b, graph_b
    return report_a, report_b

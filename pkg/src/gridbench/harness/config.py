"""Run configuration: one structured file carrying every tunable parameter."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import yaml

from gridbench import agents, interaction, metrics, planning, tasks
from gridbench.world import SceneGenConfig


@dataclass
class SensorSettings:
    fov_deg: float = 90.0
    range_m: float = 5.0
    rays: int = 181


@dataclass
class CommSettings:
    # none | hierarchical | horizontal | unlimited
    mode: str = "none"
    comm_range_m: float = interaction.DEFAULT_COMM_RANGE_M
    query_budget: int = interaction.DEFAULT_QUERY_BUDGET


@dataclass
class PlanningSettings:
    inflation_radius: int = planning.DEFAULT_INFLATION_RADIUS
    min_frontier_size: int = planning.DEFAULT_MIN_FRONTIER_SIZE


@dataclass
class AgentSettings:
    adhesion_range_m: float = agents.DEFAULT_ADHESION_RANGE_M
    place_radius_m: float = tasks.DEFAULT_PLACE_RADIUS_M


@dataclass
class SceneSettings:
    # either a path to a scene file, or generator parameters + seeds
    file: str | None = None
    seeds: list = field(default_factory=lambda: [0])
    width: int = 48
    height: int = 48
    resolution: float = 0.25
    min_rooms: int = 3
    max_rooms: int = 5
    n_objects: int = 10
    min_room_side: int = 8
    doorway_cells: int = 3

    def gen_config(self) -> SceneGenConfig:
        return SceneGenConfig(
            width=self.width, height=self.height, resolution=self.resolution,
            min_rooms=self.min_rooms, max_rooms=self.max_rooms,
            n_objects=self.n_objects, min_room_side=self.min_room_side,
            doorway_cells=self.doorway_cells,
        )


@dataclass
class RunConfig:
    benchmark: str = tasks.B1
    scene: SceneSettings = field(default_factory=SceneSettings)
    policy: str = "oracle"          # default policy for every agent
    policies: list = field(default_factory=list)  # optional per-agent override
    n_agents: int = 1
    seeds: list = field(default_factory=lambda: [0])
    tasks_per_scene: int = 5
    task_seed: int = 0
    budget: int | None = None       # None -> per-benchmark default
    sensor: SensorSettings = field(default_factory=SensorSettings)
    comm: CommSettings = field(default_factory=CommSettings)
    planning: PlanningSettings = field(default_factory=PlanningSettings)
    agents: AgentSettings = field(default_factory=AgentSettings)
    fusion_radius_m: float = 0.5
    match_radius_m: float = metrics.DEFAULT_MATCH_RADIUS_M
    # none | full: belief map preload; None -> full for B4, none otherwise
    prior_map: str | None = None
    # ground_truth | path to a persisted scene-graph JSON (hierarchical admin)
    admin_graph: str = "ground_truth"
    bridge_timeout_s: float = 30.0
    output_dir: str = "runs/out"

    def __post_init__(self):
        if self.benchmark not in tasks.BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.benchmark in (tasks.B3, tasks.B4H, tasks.B4Z) and self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.policies and len(self.policies) != self.n_agents:
            raise ValueError("policies list must match n_agents")

    def effective_budget(self) -> int:
        return self.budget if self.budget is not None else tasks.DEFAULT_BUDGETS[self.benchmark]

    def effective_prior(self) -> str:
        if self.prior_map is not None:
            return self.prior_map
        return "full" if self.benchmark in (tasks.B4H, tasks.B4Z) else "none"

    def effective_comm_mode(self) -> str:
        if self.comm.mode != "none":
            return self.comm.mode
        if self.benchmark == tasks.B3:
            return "unlimited"
        if self.benchmark == tasks.B4H:
            return "hierarchical"
        if self.benchmark == tasks.B4Z:
            return "horizontal"
        return "none"

    def policy_for(self, agent_index: int) -> str:
        if self.policies:
            return self.policies[agent_index]
        return self.policy

    def sensor_config(self):
        from gridbench.sensing import SensorConfig

        return SensorConfig(fov=math.radians(self.sensor.fov_deg),
                            range_m=self.sensor.range_m, rays=self.sensor.rays)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        payload = self.to_dict()
        payload.pop("output_dir", None)  # where logs land must not alter them
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        for key, sub in (("scene", SceneSettings), ("sensor", SensorSettings),
                         ("comm", CommSettings), ("planning", PlanningSettings),
                         ("agents", AgentSettings)):
            if key in data and isinstance(data[key], dict):
                data[key] = sub(**data[key])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data)

    def save(self, path) -> None:
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)

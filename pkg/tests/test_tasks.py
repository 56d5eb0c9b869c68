import math

import pytest

from gridbench import tasks as tl
from gridbench.agents import AgentState, WorldState
from gridbench.sensing import Pose
from gridbench.tasks import (
    B1,
    B2,
    B3,
    B4H,
    B4Z,
    Task,
    TaskGenerationError,
    check_success,
    final_distance,
    generate_tasks,
    ground_truth_path,
    parse_instruction,
    plan_for_task,
    render_instruction,
    spawn_cells,
)


def test_instruction_roundtrip_all_templates():
    cases = [
        (B1, {"target_class": "mug", "target_room": "room-a"}),
        (B2, {"target_class": "mug", "target_room": "room-a",
              "dest_class": "vase", "dest_room": "room-b"}),
        (B4H, {"target_class": "mug", "target_room": "room-a",
               "dest_class": "vase", "dest_room": "room-b",
               "assigned_agent": "robot1"}),
        (B3, {}),
    ]
    for bench, goal in cases:
        text = render_instruction(bench, goal)
        got_bench, got_goal = parse_instruction(text)
        # B4Z shares the B4H template; the regime lives outside the text
        assert got_bench == (B4H if bench in (B4H, B4Z) else bench)
        assert got_goal == goal


def test_parse_rejects_freeform():
    with pytest.raises(ValueError):
        parse_instruction("go somewhere nice")


def test_generation_deterministic(small_scene):
    a = generate_tasks(small_scene, B2, 5, seed=3)
    b = generate_tasks(small_scene, B2, 5, seed=3)
    assert [t.to_dict() for t in a] == [t.to_dict() for t in b]
    c = generate_tasks(small_scene, B2, 5, seed=4)
    assert [t.to_dict() for t in a] != [t.to_dict() for t in c]


def test_generated_tasks_are_solvable_with_positive_paths(small_scene):
    for t in generate_tasks(small_scene, B1, 8, seed=0):
        assert t.solvable
        assert t.shortest_path_m > 0
        assert t.start in set(spawn_cells(small_scene))
        # path can be reproduced from the stored goal
        assert ground_truth_path(small_scene, t) == pytest.approx(t.shortest_path_m)


def test_max_path_bound_respected(small_scene):
    for t in generate_tasks(small_scene, B2, 5, seed=1, max_path_m=8.0):
        assert t.shortest_path_m <= 8.0


def test_carry_dest_class_differs(small_scene):
    for t in generate_tasks(small_scene, B2, 8, seed=2):
        assert t.goal["dest_class"] != t.goal["target_class"]


def test_carry_goal_not_pre_satisfied(small_scene):
    for t in generate_tasks(small_scene, B2, 8, seed=2):
        for s in tl.instances_matching(small_scene, t.goal["target_class"],
                                       t.goal["target_room"]):
            for d in tl.instances_matching(small_scene, t.goal["dest_class"],
                                           t.goal["dest_room"]):
                assert math.dist(s.center, d.center) > tl.DEFAULT_PLACE_RADIUS_M


def test_b4_round_robin_assignment(small_scene):
    ts = generate_tasks(small_scene, B4H, 4, seed=0, n_agents=2, max_path_m=8.0)
    assert [t.goal["assigned_agent"] for t in ts] == ["robot0", "robot1"] * 2
    for t in ts:
        n = int(t.goal["assigned_agent"].removeprefix("robot"))
        assert t.instruction.startswith(f"robot {n}, please take")


def test_unknown_benchmark_rejected(small_scene):
    with pytest.raises(ValueError):
        generate_tasks(small_scene, "B9", 1, seed=0)


def test_plan_for_task_picks_nearest_instance(small_scene):
    t = generate_tasks(small_scene, B2, 1, seed=5)[0]
    plan = plan_for_task(small_scene, t)
    assert plan["leg1"].cells[0] == t.start
    assert plan["target"].class_label == t.goal["target_class"]
    assert plan["dest"].class_label == t.goal["dest_class"]
    assert plan["total_m"] == pytest.approx(t.shortest_path_m)
    assert plan["leg2"].cells[0] == plan["leg1"].cells[-1]


def test_task_dict_roundtrip(small_scene):
    t = generate_tasks(small_scene, B4Z, 1, seed=0, n_agents=2, max_path_m=8.0)[0]
    assert Task.from_dict(t.to_dict()).to_dict() == t.to_dict()


def agent_near(world, center, heading=0.0, aid="robot0"):
    best = None
    for y in range(world.grid.height):
        for x in range(world.grid.width):
            if not world.grid.is_free((x, y)):
                continue
            cx, cy = world.grid.cell_center((x, y))
            d = math.hypot(cx - center[0], cy - center[1])
            if best is None or d < best[0]:
                best = (d, (x, y))
    cell = best[1]
    x, y = world.grid.cell_center(cell)
    st = AgentState(id=aid, pose=Pose(x, y, heading))
    world.agent_cells[aid] = cell
    return st


def test_check_success_b1_visibility(small_scene):
    w = WorldState(small_scene)
    obj = small_scene.objects[0]
    goal = {"target_class": obj.class_label,
            "target_room": small_scene.room_by_id(obj.room_id).label}
    t = Task(benchmark=B1, instruction=render_instruction(B1, goal), goal=goal)
    st = agent_near(w, obj.center)
    # face the object
    ang = math.atan2(obj.center[1] - st.pose.y, obj.center[0] - st.pose.x)
    st.pose = Pose(st.pose.x, st.pose.y, ang)
    assert check_success(B1, w, {"robot0": st}, t) is True
    # far corner: not visible
    far = AgentState(id="robot0", pose=Pose(0.375, 0.375, ang + math.pi))
    assert check_success(B1, w, {"robot0": far}, t) is False
    assert final_distance(w, {"robot0": st}, t) == pytest.approx(
        st.pose.distance_to(obj.center))


def test_check_success_b3_is_none(small_scene):
    w = WorldState(small_scene)
    t = Task(benchmark=B3, instruction=tl.EXPLORE_INSTRUCTION)
    assert check_success(B3, w, {}, t) is None
    assert final_distance(w, {}, t) is None


def test_check_success_carry_distance_gate(small_scene):
    t = generate_tasks(small_scene, B2, 1, seed=6)[0]
    w = WorldState(small_scene)
    st = agent_near(w, (1.0, 1.0))
    agents = {"robot0": st}
    assert check_success(B2, w, agents, t) is False  # rejected pre-satisfied
    # teleport the source next to a destination instance
    src = tl.instances_matching(small_scene, t.goal["target_class"],
                                t.goal["target_room"])[0]
    dest = tl.instances_matching(small_scene, t.goal["dest_class"],
                                 t.goal["dest_room"])[0]
    import dataclasses
    moved = w.object_by_id(src.id)
    w._objects[src.id] = dataclasses.replace(
        moved, center=(dest.center[0] + 0.5, dest.center[1]))
    assert check_success(B2, w, agents, t) is True
    # carried objects never satisfy the goal
    w.carried_by[src.id] = "robot0"
    assert check_success(B2, w, agents, t) is False


def test_generation_fails_cleanly_without_objects(small_scene):
    class Bare:
        id = "bare"
        grid = small_scene.grid
        objects = []
        rooms = small_scene.rooms

        def room_by_id(self, rid):
            return small_scene.room_by_id(rid)

    with pytest.raises(TaskGenerationError):
        generate_tasks(Bare(), B1, 1, seed=0)

import pytest

from gridbench.grids import FREE, OBSTACLE
from gridbench.interaction import (
    Administrator,
    CommConfig,
    HIERARCHICAL,
    HORIZONTAL,
    NO_COMM,
    Query,
    Reply,
    UNLIMITED,
    exchange_if_in_range,
)
from gridbench.mapping import BeliefMap, SceneGraph, ground_truth_graph
from gridbench.sensing import Pose


def test_admin_answers_from_ground_truth(default_scene):
    admin = Administrator(graph=ground_truth_graph(default_scene))
    obj = default_scene.objects[0]
    reply = admin.answer("robot0", Query(object_class=obj.class_label))
    assert not reply.refused
    assert any(c == obj.class_label and p == obj.center for c, p, _r in reply.entries)
    want = sum(1 for o in default_scene.objects if o.class_label == obj.class_label)
    assert len(reply.entries) == want


def test_admin_room_filter(default_scene):
    admin = Administrator(graph=ground_truth_graph(default_scene),
                          query_budget_per_agent=UNLIMITED)
    obj = default_scene.objects[0]
    label = default_scene.room_by_id(obj.room_id).label
    reply = admin.answer("robot0", Query(object_class=obj.class_label,
                                         room_label=label))
    assert any(p == obj.center for _c, p, _r in reply.entries)
    nothing = admin.answer("robot0", Query(object_class=obj.class_label,
                                           room_label="no-such-room"))
    assert nothing.entries == () and not nothing.refused


def test_admin_never_fabricates(default_scene):
    admin = Administrator(graph=ground_truth_graph(default_scene))
    reply = admin.answer("robot0", Query(object_class="unobtainium"))
    assert reply.entries == ()
    empty_admin = Administrator(graph=SceneGraph(scene_id=default_scene.id))
    obj = default_scene.objects[0]
    assert empty_admin.answer("r", Query(object_class=obj.class_label)).entries == ()


def test_admin_query_budget_then_refusal(default_scene):
    admin = Administrator(graph=ground_truth_graph(default_scene),
                          query_budget_per_agent=2)
    cls = default_scene.objects[0].class_label
    assert admin.remaining_budget("robot0") == 2
    assert not admin.answer("robot0", Query(object_class=cls)).refused
    assert not admin.answer("robot0", Query(object_class=cls)).refused
    third = admin.answer("robot0", Query(object_class=cls))
    assert third.refused and third.entries == ()
    # budgets are per agent
    assert admin.remaining_budget("robot1") == 2
    assert not admin.answer("robot1", Query(object_class=cls)).refused


def test_reply_dict_roundtrip():
    r = Reply(entries=(("mug", (1.0, 2.0), "room000"), ("mug", (3.0, 4.0), None)))
    assert Reply.from_dict(r.to_dict()) == r
    refused = Reply(entries=(), refused=True)
    assert Reply.from_dict(refused.to_dict()) == refused


def test_comm_config_validation():
    with pytest.raises(ValueError):
        CommConfig(mode=HORIZONTAL, comm_range_m=0.0)
    CommConfig(mode=NO_COMM, comm_range_m=0.0)  # only horizontal needs range


class Peer:
    def __init__(self, scene, owner, pose):
        self.pose = pose
        self.belief = BeliefMap.empty(scene, owner)
        self.graph = SceneGraph(scene_id=scene.id, owner=owner)


def test_exchange_gated_by_range_and_mode(default_scene):
    a = Peer(default_scene, "a", Pose(1.0, 1.0, 0.0))
    b = Peer(default_scene, "b", Pose(2.0, 1.0, 0.0))
    a.belief.grid.set_state((1, 1), FREE)
    a.belief.cell_stamps[1, 1] = 1
    b.belief.grid.set_state((2, 2), OBSTACLE)
    b.belief.cell_stamps[2, 2] = 1

    assert exchange_if_in_range(a, b, CommConfig(mode=NO_COMM)) is None
    assert exchange_if_in_range(a, b, CommConfig(mode=HIERARCHICAL)) is None
    out_of_range = CommConfig(mode=HORIZONTAL, comm_range_m=0.5)
    assert exchange_if_in_range(a, b, out_of_range) is None
    assert a.belief.grid.state((2, 2)) != OBSTACLE  # untouched

    in_range = CommConfig(mode=HORIZONTAL, comm_range_m=3.0)
    reports = exchange_if_in_range(a, b, in_range)
    assert reports is not None
    # both peers now hold the union of knowledge
    assert a.belief.grid.state((2, 2)) == OBSTACLE
    assert b.belief.grid.state((1, 1)) == FREE
    assert a.belief.known_count() == b.belief.known_count() == 2

import pytest

from fogsim.execution import ExecutionStatus, Task, execute
from fogsim.objective import CLOUD, NodeAction
from fogsim.topology import FogGraph, NodeSpec, fail_node


def line_graph(cache_cap=2):
    """0 -- 1 -- 2, cache capacity `cache_cap` each."""
    nodes = {i: NodeSpec(i, 10.0, cache_cap, 1.0) for i in range(3)}
    adj = {0: {1: 1.0}, 1: {0: 1.0, 2: 1.0}, 2: {1: 1.0}}
    return FogGraph(nodes, adj, cloud_delay=50.0,
                    alive={i: True for i in range(3)})


def fresh_joint():
    return {0: NodeAction(frozenset({0}), 1),
            1: NodeAction(frozenset(), 2),
            2: NodeAction(frozenset({1}), CLOUD)}


class TestServe:
    def test_success(self):
        g, joint = line_graph(), fresh_joint()
        st = execute(g, joint, Task("serve", 0, 0))
        assert st.success and st.reason is None

    def test_not_cached(self):
        g, joint = line_graph(), fresh_joint()
        st = execute(g, joint, Task("serve", 0, 1))
        assert not st.success and st.reason == "unreachable"

    def test_dead_node(self):
        g, joint = line_graph(), fresh_joint()
        fail_node(g, 0)
        st = execute(g, joint, Task("serve", 0, 0))
        assert not st.success and st.reason == "node_dead"


class TestReplicate:
    def test_success_mutates_target_only(self):
        g, joint = line_graph(), fresh_joint()
        st = execute(g, joint, Task("replicate", 0, 0, target=1))
        assert st.success
        assert joint[1].cache_set == frozenset({0})
        assert joint[0].cache_set == frozenset({0})  # source keeps its copy

    def test_cloud_source_allowed(self):
        g, joint = line_graph(), fresh_joint()
        st = execute(g, joint, Task("replicate", CLOUD, 3, target=1))
        assert st.success
        assert 3 in joint[1].cache_set

    def test_capacity_exceeded_leaves_state_untouched(self):
        g, joint = line_graph(cache_cap=1), fresh_joint()
        before = dict(joint)
        st = execute(g, joint, Task("replicate", 0, 0, target=2))
        assert not st.success and st.reason == "capacity_exceeded"
        assert joint == before

    def test_already_present_is_noop_success(self):
        g, joint = line_graph(cache_cap=1), fresh_joint()
        st = execute(g, joint, Task("replicate", 0, 1, target=2))
        assert st.success
        assert joint[2].cache_set == frozenset({1})

    def test_dead_endpoints(self):
        g, joint = line_graph(), fresh_joint()
        fail_node(g, 0)
        assert execute(g, joint, Task("replicate", 0, 0, target=1)).reason \
            == "node_dead"
        assert execute(g, joint, Task("replicate", 2, 1, target=0)).reason \
            == "node_dead"

    def test_partition_unreachable(self):
        g, joint = line_graph(), fresh_joint()
        fail_node(g, 1)  # cuts 0 from 2
        st = execute(g, joint, Task("replicate", 0, 0, target=2))
        assert not st.success and st.reason == "unreachable"


class TestMigrate:
    def test_atomic_success(self):
        g, joint = line_graph(), fresh_joint()
        st = execute(g, joint, Task("migrate", 0, 0, target=1))
        assert st.success
        assert 0 not in joint[0].cache_set
        assert 0 in joint[1].cache_set

    def test_atomic_failure_keeps_source(self):
        g, joint = line_graph(cache_cap=1), fresh_joint()
        st = execute(g, joint, Task("migrate", 0, 0, target=2))
        assert not st.success and st.reason == "capacity_exceeded"
        assert joint[0].cache_set == frozenset({0})  # nothing evicted
        assert joint[2].cache_set == frozenset({1})


def test_unknown_kind_raises():
    g, joint = line_graph(), fresh_joint()
    with pytest.raises(ValueError):
        execute(g, joint, Task("teleport", 0, 0))

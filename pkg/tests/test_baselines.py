import itertools
import math

import numpy as np
import pytest

from fogsim.agents import move_neighborhood
from fogsim.baselines import (IlpInstance, enumerate_node_actions, greedy_score,
                              greedy_step, heuristic_joint, restricted_actions,
                              solve_ilp)
from fogsim.objective import (CLOUD, CostModel, NodeAction, ObjectiveWeights,
                              potential, validate_action)
from fogsim.topology import FogGraph, NodeSpec, generate_mesh
from fogsim.workload import Catalog, DemandProfile, Phase, demand_snapshot

from instance_factory import random_instance


class TestGreedy:
    @pytest.mark.parametrize("seed", range(10))
    def test_achieves_minimum_myopic_score(self, seed):
        graph, joint, demand, _, _ = random_instance(seed, n=6, catalog=5)
        for node in graph.alive_nodes():
            chosen = greedy_step(graph, joint, demand, node)
            best = min(greedy_score(graph, joint, demand, node, cand)
                       for cand in move_neighborhood(graph, joint, node, 5))
            assert greedy_score(graph, joint, demand, node, chosen) == \
                pytest.approx(best, abs=1e-9)

    def test_keeps_current_without_strict_improvement(self):
        graph, joint, demand, _, _ = random_instance(0, n=5, catalog=4)
        node = graph.alive_nodes()[0]
        # converge the node, then ask again: must keep
        for _ in range(10):
            act = greedy_step(graph, joint, demand, node)
            if act == joint[node]:
                break
            joint[node] = act
        assert greedy_step(graph, joint, demand, node) == joint[node]

    def test_ignores_cost_and_risk(self):
        # a node with spare capacity always prefers caching its hottest
        # content over fetching it remotely, whatever the storage cost
        nodes = {0: NodeSpec(0, 10.0, 1, 1.0), 1: NodeSpec(1, 10.0, 1, 1.0)}
        adj = {0: {1: 5.0}, 1: {0: 5.0}}
        g = FogGraph(nodes, adj, 50.0, {0: True, 1: True})
        joint = {0: NodeAction(frozenset(), CLOUD),
                 1: NodeAction(frozenset(), CLOUD)}
        demand = np.array([[3.0, 1.0], [1.0, 1.0]])
        act = greedy_step(g, joint, demand, 0)
        assert act.cache_set == frozenset({0})


class TestEnumeration:
    def test_action_count_formula(self):
        graph, _, _, _, _ = random_instance(1, n=5, catalog=4)
        for i in graph.alive_nodes():
            acts = enumerate_node_actions(graph, i, 4)
            cap = graph.nodes[i].cache_capacity
            subsets = sum(math.comb(4, s) for s in range(min(cap, 4) + 1))
            assert len(acts) == subsets * (len(graph.neighbors(i)) + 1)
            assert len(set(acts)) == len(acts)
            for a in acts:
                validate_action(graph, i, a, 4)

    def test_restricted_actions_small_and_feasible(self):
        graph, _, demand, _, _ = random_instance(2, n=6, catalog=10)
        acts = restricted_actions(graph, demand, 10, per_node=12)
        for i, lst in acts.items():
            assert 1 <= len(lst) <= 12
            for a in lst:
                validate_action(graph, i, a, 10)


def tiny_instance(seed, n=3, catalog=3, cap=2):
    rng = np.random.default_rng(seed)
    graph = generate_mesh(n, 3, node_ranges={"cache_capacity": (0, cap)},
                          seed=seed)
    profile = DemandProfile([Phase(0, 2.0)], Catalog(catalog, 1.3))
    demand = demand_snapshot(profile, 0, graph.alive_nodes())
    demand = demand * rng.uniform(0.5, 1.5, size=(n, 1))
    return IlpInstance(graph, demand, ObjectiveWeights(), CostModel(), catalog)


class TestCentralizedSolver:
    @pytest.mark.parametrize("seed", range(6))
    def test_branch_and_bound_matches_exhaustive(self, seed):
        inst = tiny_instance(seed, n=2 + seed % 3, catalog=2 + seed % 2)
        ex = solve_ilp(inst, "exhaustive")
        bb = solve_ilp(inst, "branch_and_bound")
        assert ex.optimal and bb.optimal
        assert bb.objective == ex.objective  # exact, not approximate

    def test_optimum_bounds_any_feasible_joint(self):
        inst = tiny_instance(0)
        ex = solve_ilp(inst, "exhaustive")
        h = heuristic_joint(inst.graph, inst.demand, inst.catalog_size)
        assert ex.objective <= potential(inst.graph, h, inst.demand,
                                         inst.weights, inst.costs) + 1e-12

    def test_budget_exhaustion_flags_suboptimal(self):
        inst = tiny_instance(1, n=4, catalog=3)
        sol = solve_ilp(inst, "branch_and_bound", budget=10)
        assert not sol.optimal
        assert sol.joint is not None
        assert np.isfinite(sol.objective)

    def test_restricted_instances_never_claim_optimality(self):
        inst = tiny_instance(2)
        inst.actions = restricted_actions(inst.graph, inst.demand,
                                          inst.catalog_size)
        sol = solve_ilp(inst, "branch_and_bound")
        assert not sol.optimal

    def test_exhaustive_guard_and_unknown_method(self):
        inst = tiny_instance(3, n=6, catalog=3)
        if inst.joint_count() > 1_000_000:
            with pytest.raises(ValueError):
                solve_ilp(inst, "exhaustive")
        with pytest.raises(ValueError):
            solve_ilp(inst, "simplex")

    def test_heuristic_joint_feasible(self):
        graph, _, demand, _, _ = random_instance(4, n=6, catalog=8)
        joint = heuristic_joint(graph, demand, 8)
        for i, act in joint.items():
            validate_action(graph, i, act, 8)
            # hottest contents first means the cache holds a prefix of the
            # per-node demand ranking
            cap = graph.nodes[i].cache_capacity
            k = graph.alive_nodes().index(i)
            top = set(int(c) for c in np.argsort(-demand[k], kind="stable")[:cap])
            assert act.cache_set == top

"""Seeded simulator for decentralized fog resource allocation.

Fog nodes are modeled as autonomous agents that place content replicas and
pick miss-forwarding targets, coordinating through a shared memory and
pairwise negotiation.  The joint cache/forwarding profile is scored by a
weighted latency/cost/risk objective that doubles as an exact potential for
the induced game, so asynchronous best-response dynamics provably converge.
Greedy and centralized-ILP controllers are included for comparison, plus a
metrics/sweep harness and CLI.
"""

from fogsim.topology import CLOUD, FogGraph, NodeSpec, generate_mesh
from fogsim.objective import NodeAction, ObjectiveWeights, CostModel, evaluate, potential
from fogsim.scenario import Scenario
from fogsim.engine import run, run_frozen, verify_exact_potential

__all__ = [
    "FogGraph",
    "NodeSpec",
    "generate_mesh",
    "NodeAction",
    "ObjectiveWeights",
    "CostModel",
    "evaluate",
    "potential",
    "Scenario",
    "run",
    "run_frozen",
    "verify_exact_potential",
    "CLOUD",
]

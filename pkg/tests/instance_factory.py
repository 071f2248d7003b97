"""Random small instances shared across test modules."""

import numpy as np

from fogsim.engine import random_joint
from fogsim.objective import CostModel, ObjectiveWeights
from fogsim.topology import generate_mesh
from fogsim.workload import Catalog, DemandProfile, Phase, demand_snapshot


def random_instance(seed, n=6, catalog=5, base_rate=2.0):
    """(graph, joint, demand, weights, costs) drawn from one seed."""
    rng = np.random.default_rng(seed)
    graph = generate_mesh(n, 4, seed=seed)
    profile = DemandProfile([Phase(0, base_rate)], Catalog(catalog, 1.3))
    demand = demand_snapshot(profile, 0, graph.alive_nodes())
    # perturb rows so nodes are not interchangeable
    demand = demand * rng.uniform(0.5, 1.5, size=(n, 1))
    joint = random_joint(graph, catalog, rng)
    return graph, joint, demand, ObjectiveWeights(), CostModel()

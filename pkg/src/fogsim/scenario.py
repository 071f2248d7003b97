"""Scenario configuration: one JSON document drives a whole run.

Every random choice in a run flows from the single scenario seed through
named sub-streams, so two runs of the same scenario are bit-identical.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from fogsim.topology import FogGraph, generate_mesh
from fogsim.workload import Catalog, DemandProfile, Phase
from fogsim.objective import CostModel, ObjectiveWeights
from fogsim.agents import AgentConfig
from fogsim.coordination import CoordinationConfig
from fogsim.orchestrator import OrchestratorConfig


class ScenarioError(ValueError):
    pass


# Named RNG sub-streams: changing one stream's consumers never perturbs the
# others.
_STREAMS = {"topology": 0, "workload": 1, "activation": 2, "failures": 3,
            "exploration": 4, "init": 5, "solver": 6}


def stream_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), _STREAMS[name])))


DEFAULTS = {
    "topology": {
        "n": 20, "max_degree": 4, "edge_budget": 1.5, "cloud_delay": 50.0,
        "compute_capacity": [5.0, 20.0], "cache_capacity": [2, 5],
        "proc_delay": [0.5, 2.0], "link_delay": [1.0, 5.0],
    },
    "workload": {
        "catalog": {"size": 50, "zipf_s": 1.2},
        "phases": [
            {"start": 0, "base_rate": 2.0, "node_multipliers": {}},
            {"start": 1013, "base_rate": 4.0, "node_multipliers": {},
             "rotate": 25},
        ],
    },
    "objective": {
        "alpha": 1.0, "beta": 0.01, "gamma": 0.1,
        "c_store": 0.1, "c_serve": 0.01, "rho_max": 0.8,
    },
    "agent": {
        "mode": "estimated", "eps_switch": 0.01, "eps_explore": 0.005,
        "prior": -0.05, "full_enumeration": True, "local_memory_cap": 8,
    },
    "coordination": {"tau": 35, "overload_margin": 0.1, "max_pairs_per_round": 10,
                     "eps_switch": 1e-4},
    "orchestrator": {"enabled": True, "period": 100, "bound_width": 0.1},
    "baselines": {"ilp_period": 25, "solver": "branch_and_bound",
                  "exhaustive_max_nodes": 4, "budget": 2000},
    "memory": {"episodes": 60, "staleness": 2, "demand_window": 200},
    "controller": "agentic",
    "horizon": 2000,
    "failures": None,
    "seed": 1,
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class Scenario:
    cfg: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cfg = _deep_merge(DEFAULTS, self.cfg)
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(d)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls(json.loads(text))

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls(json.load(fh))

    def validate(self):
        c = self.cfg
        if c["controller"] not in ("agentic", "greedy", "ilp"):
            raise ScenarioError(f"unknown controller {c['controller']!r}")
        if c["horizon"] < 0:
            raise ScenarioError("horizon must be >= 0")
        if c["topology"]["n"] < 2:
            raise ScenarioError("need at least 2 nodes")
        if not 1 <= c["memory"]["episodes"]:
            raise ScenarioError("memory episodes must be >= 1")
        tau = c["coordination"]["tau"]
        if tau < 1:
            raise ScenarioError("coordination interval must be >= 1")
        starts = [p["start"] for p in c["workload"]["phases"]]
        if starts != sorted(starts):
            raise ScenarioError("phase starts must be increasing")
        n = c["topology"]["n"]
        fails = c["failures"]
        if fails and "plan" in fails:
            for slot, node in fails["plan"]:
                if not 0 <= node < n:
                    raise ScenarioError(f"failure plan names unknown node {node}")
        if c["agent"]["mode"] not in ("oracle", "estimated"):
            raise ScenarioError("agent mode must be oracle or estimated")
        ObjectiveWeights(**{k: c["objective"][k] for k in ("alpha", "beta", "gamma")})

    # -- derived objects -------------------------------------------------

    @property
    def seed(self) -> int:
        return self.cfg["seed"]

    def with_overrides(self, **kw) -> "Scenario":
        return Scenario(_deep_merge(self.cfg, kw))

    def build_graph(self) -> FogGraph:
        t = self.cfg["topology"]
        ranges = {
            "compute_capacity": tuple(t["compute_capacity"]),
            "cache_capacity": tuple(t["cache_capacity"]),
            "proc_delay": tuple(t["proc_delay"]),
            "link_delay": tuple(t["link_delay"]),
        }
        return generate_mesh(t["n"], t["max_degree"], ranges, seed=self.seed,
                             edge_budget=t["edge_budget"],
                             cloud_delay=t["cloud_delay"])

    def build_profile(self) -> DemandProfile:
        w = self.cfg["workload"]
        catalog = Catalog(w["catalog"]["size"], w["catalog"]["zipf_s"])
        phases = [Phase(p["start"], p["base_rate"],
                        {int(k): v for k, v in p.get("node_multipliers", {}).items()},
                        p.get("rotate", 0))
                  for p in w["phases"]]
        return DemandProfile(phases, catalog)

    def weights(self) -> ObjectiveWeights:
        o = self.cfg["objective"]
        return ObjectiveWeights(o["alpha"], o["beta"], o["gamma"])

    def costs(self) -> CostModel:
        o = self.cfg["objective"]
        return CostModel(o["c_store"], o["c_serve"], o["rho_max"])

    def agent_config(self) -> AgentConfig:
        return AgentConfig(**self.cfg["agent"])

    def coordination_config(self) -> CoordinationConfig:
        c = self.cfg["coordination"]
        return CoordinationConfig(c["tau"], c["overload_margin"],
                                  c["max_pairs_per_round"], c["eps_switch"])

    def orchestrator_config(self) -> OrchestratorConfig:
        o = self.cfg["orchestrator"]
        return OrchestratorConfig(o["enabled"], o["period"], o["bound_width"],
                                  self.cfg["objective"]["rho_max"])

    def rng(self, name: str) -> np.random.Generator:
        return stream_rng(self.seed, name)

    def canonical_json(self) -> str:
        return json.dumps(self.cfg, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]

"""Slow-timescale orchestrator: ranks sub-objectives and publishes guidance.

The orchestrator never issues control actions.  Every T_G slots it looks at
aggregate trends (recent weighted component means and demand-digest load)
and publishes effective-weight guidance: the top-ranked component's weight
is nudged to the upper bound of a +/- band around the configured value,
the others stay at their configured values.
"""

from __future__ import annotations

from dataclasses import dataclass

from fogsim.objective import ObjectiveWeights


@dataclass(frozen=True)
class PolicyGuidance:
    # ranking: component names ordered most- to least-important
    ranking: tuple[str, ...]
    # per-component (lower, upper) effective-weight bounds
    bounds: dict[str, tuple[float, float]]
    # effective weights agents should use, always within bounds
    effective: ObjectiveWeights
    # optional soft constraint: suggested utilization ceiling
    utilization_ceiling: float | None = None


@dataclass
class OrchestratorConfig:
    enabled: bool = True
    period: int = 100       # T_G, slots between invocations
    bound_width: float = 0.1  # +/- fraction around configured weights
    overload_threshold: float = 0.8


def orchestrate(component_means: dict[str, float],
                mean_utilization: float,
                weights: ObjectiveWeights,
                config: OrchestratorConfig) -> PolicyGuidance:
    """Derive guidance from long-term stats.

    component_means holds recent means of the *weighted* components
    {"latency": alpha*L, "cost": beta*C, "risk": gamma*R}; sustained
    overload promotes risk to the top of the ranking regardless.
    """
    base = {"latency": weights.alpha, "cost": weights.beta, "risk": weights.gamma}
    w = config.bound_width
    bounds = {k: (max(0.0, v * (1 - w)), v * (1 + w)) for k, v in base.items()}

    names = ["latency", "cost", "risk"]
    ranked = sorted(names, key=lambda k: (-component_means.get(k, base[k]), k))
    ceiling = None
    if mean_utilization > config.overload_threshold:
        ranked = ["risk"] + [k for k in ranked if k != "risk"]
        ceiling = config.overload_threshold

    top = ranked[0]
    eff = dict(base)
    eff[top] = bounds[top][1]
    effective = ObjectiveWeights(eff["latency"], eff["cost"], eff["risk"])
    return PolicyGuidance(ranking=tuple(ranked), bounds=bounds,
                          effective=effective, utilization_ceiling=ceiling)

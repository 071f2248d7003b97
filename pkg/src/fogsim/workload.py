"""Request traffic generation.

Arrivals are non-stationary Poisson realized as piecewise-constant phases
(base rate times per-node multipliers), content popularity is Zipf with
skew > 1.  Everything is a pure function of (profile, seed, slot), so a
request stream is reproducible from the scenario alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class Catalog:
    size: int
    zipf_s: float = 1.2

    def __post_init__(self):
        if self.size < 1:
            raise WorkloadError("catalog size must be >= 1")
        if self.zipf_s <= 1:
            raise WorkloadError("zipf skew must be > 1")


@dataclass(frozen=True)
class Phase:
    start: int
    base_rate: float
    # multiplier per node id; nodes absent from the map get 1.0
    node_multipliers: dict[int, float] = field(default_factory=dict)
    # popularity rotation: content id c holds rank ((c - rotate) mod size) + 1,
    # so a nonzero rotation models trending-content turnover at a phase
    # boundary (the previously hottest ids go cold and vice versa)
    rotate: int = 0

    def rate(self, node: int) -> float:
        return self.base_rate * self.node_multipliers.get(node, 1.0)


@dataclass
class DemandProfile:
    phases: list[Phase]
    catalog: Catalog

    def __post_init__(self):
        if not self.phases:
            raise WorkloadError("need at least one phase")
        starts = [p.start for p in self.phases]
        if starts != sorted(starts) or len(set(starts)) != len(starts):
            raise WorkloadError("phase starts must be strictly increasing")
        for p in self.phases:
            if p.base_rate < 0 or any(m < 0 for m in p.node_multipliers.values()):
                raise WorkloadError("rates must be >= 0")

    def phase_at(self, t: int) -> Phase:
        cur = self.phases[0]
        for p in self.phases:
            if p.start <= t:
                cur = p
            else:
                break
        return cur

    def shift_slots(self) -> list[int]:
        """Phase boundaries after t=0."""
        return [p.start for p in self.phases if p.start > 0]


@dataclass(frozen=True)
class Request:
    arrival_time: float
    ingress: int
    content: int


def zipf_pmf(catalog: Catalog, k: int | None = None):
    """Zipf pmf over ranks 1..N_c.  With k, returns p(k); without, the
    whole pmf as an array indexed by rank-1."""
    ranks = np.arange(1, catalog.size + 1, dtype=float)
    weights = ranks ** (-catalog.zipf_s)
    pmf = weights / weights.sum()
    if k is None:
        return pmf
    if not 1 <= k <= catalog.size:
        raise WorkloadError(f"rank {k} out of range 1..{catalog.size}")
    return float(pmf[k - 1])


def sample_contents(catalog: Catalog, count: int, rng: np.random.Generator,
                    rotate: int = 0) -> np.ndarray:
    """Draw content ids (0-based, id = rank-1 when rotate=0) i.i.d. from
    the Zipf pmf."""
    cdf = np.cumsum(zipf_pmf(catalog))
    u = rng.random(count)
    drawn = np.searchsorted(cdf, u, side="right").clip(0, catalog.size - 1)
    if rotate:
        drawn = (drawn + rotate) % catalog.size
    return drawn


def sample_arrivals(profile: DemandProfile, node: int, slot: int,
                    rng: np.random.Generator) -> list[Request]:
    """Requests arriving at `node` during [slot, slot+1)."""
    phase = profile.phase_at(slot)
    rate = phase.rate(node)
    if rate <= 0:
        return []
    count = int(rng.poisson(rate))
    if count == 0:
        return []
    times = np.sort(rng.random(count)) + slot
    contents = sample_contents(profile.catalog, count, rng, phase.rotate)
    return [Request(float(t), node, int(c)) for t, c in zip(times, contents)]


def demand_snapshot(profile: DemandProfile, t: int, node_ids: list[int]) -> np.ndarray:
    """Expected per-(node, content) arrival-rate matrix at slot t.

    Row order follows node_ids; piecewise-constant between phase boundaries.
    """
    phase = profile.phase_at(t)
    pmf = zipf_pmf(profile.catalog)
    if phase.rotate:
        pmf = np.roll(pmf, phase.rotate)
    rates = np.array([phase.rate(i) for i in node_ids], dtype=float)
    return rates[:, None] * pmf[None, :]

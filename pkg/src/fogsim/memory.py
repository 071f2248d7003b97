"""Shared agentic memory: topology summary, demand history, outcome episodes.

A single logical store with a fixed read-staleness lag standing in for
eventual consistency: readers at slot t see everything written at or before
t - staleness.  Contents persist across node failures; nothing a failure
triggers may delete records.  The outcome history is a FIFO ring buffer of
20-100 episodes (configurable).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np


UNSEEN = None  # query result for a (context, action) pair with no samples


@dataclass(frozen=True)
class EpisodeRecord:
    agent: int
    context: tuple          # discretized local state, finite alphabet
    action_class: tuple     # bucketed action descriptor
    delta: float            # observed change of the agent's local contribution
    slot: int


@dataclass(frozen=True)
class TopologySummary:
    alive: tuple[int, ...]
    degrees: dict[int, int]
    slot: int


@dataclass
class GuidanceBoard:
    guidance: object = None       # orchestrator.PolicyGuidance
    publish_slot: int = -1


class SharedMemory:
    def __init__(self, episode_capacity: int = 60, demand_window: int = 200,
                 staleness: int = 2):
        if episode_capacity < 1:
            raise ValueError("episode capacity must be >= 1")
        self.episode_capacity = episode_capacity
        self.staleness = staleness
        self.outcomes: deque[EpisodeRecord] = deque(maxlen=episode_capacity)
        # demand digest: (slot, per-node aggregate arrival count) ring buffer
        self.demand: deque[tuple[int, dict[int, float]]] = deque(maxlen=demand_window)
        self.topology: Optional[TopologySummary] = None
        self.board = GuidanceBoard()
        self._guidance_history: list[tuple[int, object]] = []
        self.write_count = 0

    # -- writes ----------------------------------------------------------

    def append_episode(self, record: EpisodeRecord) -> None:
        if not np.isfinite(record.delta):
            raise ValueError("episode delta must be finite")
        self.outcomes.append(record)
        self.write_count += 1

    def record_demand(self, slot: int, counts: dict[int, float]) -> None:
        self.demand.append((slot, dict(counts)))
        self.write_count += 1

    def update_topology(self, summary: TopologySummary) -> None:
        self.topology = summary
        self.write_count += 1

    def publish_guidance(self, guidance, slot: int) -> None:
        if slot < self.board.publish_slot:
            raise ValueError("guidance publish slots must be monotone")
        self.board = GuidanceBoard(guidance, slot)
        self._guidance_history.append((slot, guidance))
        del self._guidance_history[:-10]
        self.write_count += 1

    # -- reads -----------------------------------------------------------

    def read(self, reader: int, t: int) -> "MemoryView":
        """Staleness-bounded view: state as of slot t - staleness."""
        return MemoryView(self, max(0, t - self.staleness))

    def dump_jsonl(self) -> str:
        lines = [json.dumps(asdict(r), sort_keys=True) for r in self.outcomes]
        return "\n".join(lines)


class MemoryView:
    """Read-only snapshot filter at a visibility horizon slot."""

    def __init__(self, mem: SharedMemory, horizon: int):
        self._mem = mem
        self.horizon = horizon

    def episodes(self) -> list[EpisodeRecord]:
        return [r for r in self._mem.outcomes if r.slot <= self.horizon]

    def query_estimate(self, agent: int, context: tuple,
                       action_class: tuple) -> tuple[Optional[float], int]:
        """(mean delta, sample count) over the agent's own matching visible
        episodes; (UNSEEN, 0) when nothing matches.

        Episodes are scoped to their author: a delta measures the change of
        one node's local contribution under that node's demand and neighbor
        delays, and the same class of move at another node routinely has the
        opposite sign, so cross-agent averages misprice moves for everyone
        at once."""
        deltas = [r.delta for r in self.episodes()
                  if r.agent == agent and r.context == context
                  and r.action_class == action_class]
        if not deltas:
            return UNSEEN, 0
        return sum(deltas) / len(deltas), len(deltas)

    def demand_history(self) -> list[tuple[int, dict[int, float]]]:
        return [(s, c) for s, c in self._mem.demand if s <= self.horizon]

    def guidance(self):
        latest = None
        for slot, g in self._mem._guidance_history:
            if slot <= self.horizon:
                latest = g
        return latest

    def topology(self) -> Optional[TopologySummary]:
        ts = self._mem.topology
        if ts is not None and ts.slot > self.horizon:
            return None
        return ts

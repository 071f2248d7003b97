"""Stateless execution layer: serve / replicate / migrate tasks.

Execution agents hold no state of their own; a task either succeeds and
mutates the caches accordingly, or fails with a reason and mutates nothing.
Migrate is atomic (replicate at target + evict at source, both or neither).
The cache state lives in the joint action, which is what gets mutated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from fogsim.topology import CLOUD, FogGraph, path_delay
from fogsim.objective import JointAction, NodeAction


@dataclass(frozen=True)
class Task:
    kind: str            # serve | replicate | migrate
    node: int            # acting/source node
    content: int
    target: Optional[int] = None   # replicate/migrate destination
    issue_slot: int = 0


@dataclass(frozen=True)
class ExecutionStatus:
    task: Task
    success: bool
    reason: Optional[str] = None   # node_dead | capacity_exceeded | unreachable


def execute(graph: FogGraph, joint: JointAction, task: Task) -> ExecutionStatus:
    """Apply a task against (graph, joint).  Failures leave caches untouched."""
    if task.kind == "serve":
        if not graph.is_alive(task.node):
            return ExecutionStatus(task, False, "node_dead")
        if task.content not in joint[task.node].cache_set:
            return ExecutionStatus(task, False, "unreachable")
        return ExecutionStatus(task, True)

    if task.kind in ("replicate", "migrate"):
        src, dst = task.node, task.target
        if src != CLOUD and not graph.is_alive(src):
            return ExecutionStatus(task, False, "node_dead")
        if not graph.is_alive(dst):
            return ExecutionStatus(task, False, "node_dead")
        if src != CLOUD and path_delay(graph, src, dst) == float("inf"):
            return ExecutionStatus(task, False, "unreachable")
        dst_act = joint[dst]
        if task.content in dst_act.cache_set:
            pass  # already present at the target; treat as a no-op success
        elif len(dst_act.cache_set) >= graph.nodes[dst].cache_capacity:
            return ExecutionStatus(task, False, "capacity_exceeded")
        else:
            joint[dst] = NodeAction(dst_act.cache_set | {task.content},
                                    dst_act.forward_to)
        if task.kind == "migrate" and src != CLOUD:
            src_act = joint[src]
            joint[src] = NodeAction(src_act.cache_set - {task.content},
                                    src_act.forward_to)
        return ExecutionStatus(task, True)

    raise ValueError(f"unknown task kind {task.kind!r}")

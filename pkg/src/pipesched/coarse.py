"""Coarse stage-assignment producers and validity repair.

Two built-in heuristics (a balanced topological partitioner and a
priority-driven list scheduler) plus a loader for externally produced
schedule files. `repair_schedule` projects an arbitrary total assignment onto
the valid set so external producers may emit non-monotone output.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .graph import FORMAT_VERSION, ComputeGraph, Schedule, ScheduleError, validate_schedule

log = logging.getLogger(__name__)

KIND_BALANCED = "heuristic_balanced"
KIND_LIST = "list_schedule"
KIND_EXTERNAL = "external_file"


@dataclass(frozen=True)
class CoarseSource:
    kind: str
    origin: str


def _asap_id_order(g: ComputeGraph) -> list[int]:
    return sorted(range(g.num_nodes), key=lambda v: (g.levels[v], v))


def balanced_topo_partition(g: ComputeGraph, num_stages: int) -> Schedule:
    """Greedy prefix partition of the ASAP order targeting even memory.

    Nodes are taken in (ASAP level, id) order; the stage pointer advances once
    the current stage's parameter bytes reach total/K, or when exactly enough
    nodes remain to keep every later stage non-empty. Monotone by construction
    because stage indices never decrease along the traversal.
    """
    n = g.num_nodes
    if num_stages > n:
        raise ScheduleError(f"cannot fill {num_stages} stages with {n} nodes")
    target = sum(g.param_bytes) / num_stages
    assignment: dict[int, int] = {}
    k = 0
    placed = 0
    cum = 0
    for idx, v in enumerate(_asap_id_order(g)):
        remaining = n - idx
        if placed >= 1 and k < num_stages - 1 and (cum >= target or remaining == num_stages - 1 - k):
            k += 1
            placed = 0
            cum = 0
        assignment[v] = k
        placed += 1
        cum += g.param_bytes[v]
    return Schedule(num_stages, assignment)


def list_schedule(g: ComputeGraph, num_stages: int) -> Schedule:
    """List scheduling: ready nodes ranked by out_bytes (descending), ties by
    ASAP level then id; the current stage accepts nodes until the next one
    would push its memory past total/K."""
    n = g.num_nodes
    if num_stages > n:
        raise ScheduleError(f"cannot fill {num_stages} stages with {n} nodes")
    target = sum(g.param_bytes) / num_stages
    indeg = [len(g.preds(v)) for v in range(n)]
    ready = [v for v in range(n) if indeg[v] == 0]
    assignment: dict[int, int] = {}
    k = 0
    placed = 0
    cum = 0
    scheduled = 0
    while ready:
        ready.sort(key=lambda v: (-g.out_bytes[v], g.levels[v], v))
        v = ready.pop(0)
        remaining = n - scheduled
        overflow = cum + g.param_bytes[v] > target
        if placed >= 1 and k < num_stages - 1 and (overflow or remaining == num_stages - 1 - k):
            k += 1
            placed = 0
            cum = 0
        assignment[v] = k
        placed += 1
        cum += g.param_bytes[v]
        scheduled += 1
        for w in g.succs(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return Schedule(num_stages, assignment)


def load_coarse_schedule(path: str | Path, g: ComputeGraph, num_stages: int) -> Schedule:
    """Load a schedule file against a graph. Strict: unknown or missing nodes,
    out-of-range stages, and stage-count mismatches are errors, never repaired
    silently."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ScheduleError(f"cannot read schedule file {path}: {e}") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise ScheduleError(f"unsupported format_version: {doc.get('format_version')!r}")
    if doc.get("num_stages") != num_stages:
        raise ScheduleError(f"stage count mismatch: file has {doc.get('num_stages')}, expected {num_stages}")
    assignment: dict[int, int] = {}
    for key, stage in doc.get("assignment", {}).items():
        v = int(key)
        if not (0 <= v < g.num_nodes):
            raise ScheduleError(f"unknown node {v}")
        if not isinstance(stage, int) or not (0 <= stage < num_stages):
            raise ScheduleError(f"stage out of range for node {v}: {stage}")
        assignment[v] = stage
    for v in range(g.num_nodes):
        if v not in assignment:
            raise ScheduleError(f"missing node {v}")
    return Schedule(num_stages, assignment)


def repair_schedule(g: ComputeGraph, s: Schedule) -> Schedule:
    """Project a total assignment onto the valid set.

    Pass 1 raises each node to at least the repaired stage of its
    predecessors (forward monotone projection; stages never decrease here).
    Pass 2 restores the non-empty-stage policy by compacting used stages and
    splitting the fullest stage at its topological midpoint until all K
    stages host a node. Idempotent on already-valid schedules.
    """
    K = s.num_stages
    if K > g.num_nodes:
        raise ScheduleError(f"cannot fill {K} stages with {g.num_nodes} nodes")
    stages = {v: s.assignment[v] for v in range(g.num_nodes)}
    for v in g.topo_order:
        for u in g.preds(v):
            if stages[u] > stages[v]:
                stages[v] = stages[u]

    used = sorted(set(stages.values()))
    if len(used) < K or used != list(range(K)):
        remap = {old: new for new, old in enumerate(used)}
        stages = {v: remap[k] for v, k in stages.items()}
        num_used = len(used)
        while num_used < K:
            counts: dict[int, list[int]] = {k: [] for k in range(num_used)}
            for v, k in stages.items():
                counts[k].append(v)
            donor = max(range(num_used), key=lambda k: (len(counts[k]), -k))
            members = sorted(counts[donor], key=lambda v: (g.levels[v], v))
            keep = (len(members) + 1) // 2
            moved = set(members[keep:])
            for v, k in stages.items():
                if k > donor:
                    stages[v] = k + 1
                elif v in moved:
                    stages[v] = donor + 1
            num_used += 1
    repaired = Schedule(K, stages)
    if repaired.assignment != s.assignment:
        log.info("repaired coarse schedule: %d nodes moved",
                 sum(1 for v in stages if stages[v] != s.assignment[v]))
    return repaired

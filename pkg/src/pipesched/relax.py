"""Search-window relaxation around a coarse schedule.

The nodes incident to stage-crossing edges span a band of ASAP levels; the
relaxation level gamma widens that band. Nodes inside the band become free
(full stage range), everything outside stays frozen at its coarse stage, so
the refined problem keeps the coarse schedule as a feasibility witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .graph import ComputeGraph, Schedule, ScheduleError, validate_schedule


def boundary_edges(g: ComputeGraph, s: Schedule) -> set[tuple[int, int]]:
    """Edges (i, j) whose endpoints sit on different stages (s_i < s_j)."""
    report = validate_schedule(g, s, require_nonempty=False)
    if not report.ok:
        raise ScheduleError(f"invalid schedule: {report.violations[0].detail}")
    return {(i, j) for i, j in g.edges if s.assignment[i] < s.assignment[j]}


@dataclass(frozen=True)
class RelaxWindow:
    lo_level: int
    hi_level: int
    gamma: int
    free_nodes: frozenset[int]
    frozen_nodes: frozenset[int]

    def to_json(self) -> str:
        return json.dumps(
            {
                "lo_level": self.lo_level,
                "hi_level": self.hi_level,
                "gamma": self.gamma,
                "free_nodes": sorted(self.free_nodes),
                "frozen_nodes": sorted(self.frozen_nodes),
            },
            indent=1,
        )


def relax_window(g: ComputeGraph, s: Schedule, gamma: int) -> RelaxWindow:
    """Level band [min source level - gamma, max sink level + gamma] over the
    boundary edges, clamped to [0, depth]. No boundary edges (single-stage
    schedule) yields an empty window with every node frozen."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    cut = boundary_edges(g, s)
    everything = frozenset(range(g.num_nodes))
    if not cut:
        return RelaxWindow(0, -1, gamma, frozenset(), everything)
    levels = g.levels
    lo = max(0, min(levels[i] for i, _ in cut) - gamma)
    hi = min(g.depth, max(levels[j] for _, j in cut) + gamma)
    free = frozenset(v for v in range(g.num_nodes) if lo <= levels[v] <= hi)
    return RelaxWindow(lo, hi, gamma, free, everything - free)


@dataclass(frozen=True)
class StageDomains:
    """Admissible stage set per node: full range for free nodes, the coarse
    stage singleton for frozen ones."""

    domain: dict[int, tuple[int, ...]]

    def size_product(self) -> int:
        p = 1
        for d in self.domain.values():
            p *= len(d)
        return p

    def to_json(self) -> str:
        return json.dumps({str(v): list(d) for v, d in sorted(self.domain.items())}, indent=1)


def build_domains(g: ComputeGraph, s: Schedule, window: RelaxWindow, num_stages: int) -> StageDomains:
    full = tuple(range(num_stages))
    domain: dict[int, tuple[int, ...]] = {}
    for v in range(g.num_nodes):
        domain[v] = full if v in window.free_nodes else (s.assignment[v],)
    return StageDomains(domain)


def full_domains(g: ComputeGraph, num_stages: int) -> StageDomains:
    """Unrelaxed domains: every node may take any stage."""
    full = tuple(range(num_stages))
    return StageDomains({v: full for v in range(g.num_nodes)})

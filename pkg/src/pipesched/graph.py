"""Computation-graph data model, file I/O, topological levels, and schedule cost metrics.

A graph is a DAG of operators. Each operator carries two byte-counts: the
parameter memory it pins on its stage (`param_bytes`) and the size of its
output tensor (`out_bytes`). The tensor size of an edge (u, v) is the
producer's `out_bytes`; an output consumed by several later-stage nodes is
counted once per consuming edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

FORMAT_VERSION = 1

# Default on-device parameter cache: 8 MiB of SRAM, overridable per run.
DEFAULT_CACHE_BYTES = 8 * 1024 * 1024


class GraphError(ValueError):
    """Raised for malformed graph documents or structural violations."""


class ScheduleError(ValueError):
    """Raised for malformed schedules or schedule files."""


@dataclass(frozen=True)
class NodeAttr:
    id: int
    name: str
    param_bytes: int
    out_bytes: int


class ComputeGraph:
    """Immutable DAG over dense node ids 0..n-1.

    Construction validates edge endpoints, duplicate edges, attribute signs,
    and acyclicity; predecessor/successor lists and a topological order are
    precomputed.
    """

    def __init__(self, nodes: list[NodeAttr], edges: list[tuple[int, int]]):
        n = len(nodes)
        for idx, node in enumerate(nodes):
            if node.id != idx:
                raise GraphError(f"node ids must be dense 0..{n - 1}, got {node.id} at position {idx}")
            if node.param_bytes < 0 or node.out_bytes < 0:
                raise GraphError(f"negative attribute on node {node.id}")
        seen: set[tuple[int, int]] = set()
        preds: list[list[int]] = [[] for _ in range(n)]
        succs: list[list[int]] = [[] for _ in range(n)]
        for src, dst in edges:
            if not (0 <= src < n) or not (0 <= dst < n):
                raise GraphError(f"dangling edge endpoint ({src}, {dst})")
            if (src, dst) in seen:
                raise GraphError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
            succs[src].append(dst)
            preds[dst].append(src)
        self.nodes: tuple[NodeAttr, ...] = tuple(nodes)
        self.edges: tuple[tuple[int, int], ...] = tuple((int(s), int(d)) for s, d in edges)
        self._preds = tuple(tuple(p) for p in preds)
        self._succs = tuple(tuple(s) for s in succs)
        self.param_bytes: tuple[int, ...] = tuple(v.param_bytes for v in nodes)
        self.out_bytes: tuple[int, ...] = tuple(v.out_bytes for v in nodes)
        self.topo_order: tuple[int, ...] = self._toposort()

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def preds(self, v: int) -> tuple[int, ...]:
        return self._preds[v]

    def succs(self, v: int) -> tuple[int, ...]:
        return self._succs[v]

    def _toposort(self) -> tuple[int, ...]:
        indeg = [len(p) for p in self._preds]
        ready = [v for v in range(self.num_nodes) if indeg[v] == 0]
        order: list[int] = []
        while ready:
            v = ready.pop()
            order.append(v)
            for w in self._succs[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
        if len(order) != self.num_nodes:
            raise GraphError("cycle detected")
        return tuple(order)

    @cached_property
    def levels(self) -> tuple[int, ...]:
        """ASAP level per node id: 0 for sources, else 1 + max over predecessors."""
        lvl = [0] * self.num_nodes
        for v in self.topo_order:
            if self._preds[v]:
                lvl[v] = 1 + max(lvl[u] for u in self._preds[v])
        return tuple(lvl)

    @cached_property
    def depth(self) -> int:
        return max(self.levels) if self.nodes else 0

    def structurally_equal(self, other: "ComputeGraph") -> bool:
        return self.nodes == other.nodes and sorted(self.edges) == sorted(other.edges)


def asap_levels(g: ComputeGraph) -> tuple[int, ...]:
    """ASAP topological levels, indexed by node id."""
    return g.levels


@dataclass(frozen=True)
class Schedule:
    """Total stage assignment over a graph's nodes for a K-stage pipeline."""

    num_stages: int
    assignment: dict[int, int]

    def __post_init__(self):
        if self.num_stages < 1:
            raise ScheduleError("num_stages must be >= 1")
        for v, k in self.assignment.items():
            if not (0 <= k < self.num_stages):
                raise ScheduleError(f"stage out of range for node {v}: {k}")

    def stage_of(self, v: int) -> int:
        return self.assignment[v]

    def as_vector(self, g: ComputeGraph) -> tuple[int, ...]:
        return tuple(self.assignment[v] for v in range(g.num_nodes))


@dataclass(frozen=True)
class Violation:
    kind: str  # "dependence" | "empty_stage" | "unassigned" | "unknown_node"
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schedule(g: ComputeGraph, s: Schedule, require_nonempty: bool = True) -> ValidationReport:
    """Check totality, dependence (s_i <= s_j along every edge), and the
    non-empty-stage policy. Violations are data, not exceptions."""
    out: list[Violation] = []
    for v in range(g.num_nodes):
        if v not in s.assignment:
            out.append(Violation("unassigned", f"node {v} has no stage"))
    for v in s.assignment:
        if not (0 <= v < g.num_nodes):
            out.append(Violation("unknown_node", f"node {v} not in graph"))
    for i, j in g.edges:
        si, sj = s.assignment.get(i), s.assignment.get(j)
        if si is not None and sj is not None and si > sj:
            out.append(Violation("dependence", f"edge ({i}, {j}) assigned stages ({si}, {sj})"))
    if require_nonempty:
        counts = [0] * s.num_stages
        for v, k in s.assignment.items():
            if 0 <= v < g.num_nodes:
                counts[k] += 1
        for k, c in enumerate(counts):
            if c == 0:
                out.append(Violation("empty_stage", f"stage {k} empty"))
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class ScheduleMetrics:
    per_stage_mem: tuple[int, ...]
    peak_mem: int
    per_stage_offcache: tuple[int, ...]
    total_offcache: int
    per_boundary_comm: tuple[int, ...]
    max_comm: int
    objective_vector: tuple[int, int, int]


def schedule_metrics(g: ComputeGraph, s: Schedule, cache_capacity: int = DEFAULT_CACHE_BYTES) -> ScheduleMetrics:
    """Cost metrics of a schedule.

    per_stage_mem[k] sums param_bytes of nodes on stage k. per_boundary_comm[k]
    sums, over edges (i, j) with s_i = k < s_j, the producer's out_bytes:
    everything leaving stage k for any later stage is charged to boundary k.
    Off-cache memory per stage is the excess over cache_capacity.
    """
    report = validate_schedule(g, s, require_nonempty=False)
    if not report.ok:
        raise ScheduleError(f"invalid schedule: {report.violations[0].detail}")
    K = s.num_stages
    mem = [0] * K
    for v in range(g.num_nodes):
        mem[s.assignment[v]] += g.param_bytes[v]
    comm = [0] * (K - 1)
    for i, j in g.edges:
        si, sj = s.assignment[i], s.assignment[j]
        if si < sj:
            comm[si] += g.out_bytes[i]
    off = [max(0, m - cache_capacity) for m in mem]
    peak = max(mem)
    max_comm = max(comm) if comm else 0
    total_off = sum(off)
    return ScheduleMetrics(
        per_stage_mem=tuple(mem),
        peak_mem=peak,
        per_stage_offcache=tuple(off),
        total_offcache=total_off,
        per_boundary_comm=tuple(comm),
        max_comm=max_comm,
        objective_vector=(peak, total_off, max_comm),
    )


# -- file formats -------------------------------------------------------------
#
# Graph file (UTF-8 JSON):
#   {"format_version": 1,
#    "nodes": [{"id": int, "name": str, "param_bytes": int, "out_bytes": int}, ...],
#    "edges": [[src, dst], ...]}
#
# Schedule file (UTF-8 JSON):
#   {"format_version": 1, "num_stages": int,
#    "assignment": {"<node_id>": stage, ...},
#    "meta": {"producer": str, "gamma": int | null}}


def parse_graph(text: str) -> ComputeGraph:
    """Parse a graph document. Node ids are densified in input order, so
    arbitrary unique ids are accepted; edges are remapped accordingly."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphError(f"malformed graph document: {e}") from e
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise GraphError("malformed graph document: missing nodes/edges")
    if doc.get("format_version") != FORMAT_VERSION:
        raise GraphError(f"unsupported format_version: {doc.get('format_version')!r}")
    id_map: dict[int, int] = {}
    nodes: list[NodeAttr] = []
    for raw in doc["nodes"]:
        try:
            rid = int(raw["id"])
            name = str(raw["name"])
            p = int(raw["param_bytes"])
            t = int(raw["out_bytes"])
        except (KeyError, TypeError, ValueError) as e:
            raise GraphError(f"malformed node record: {raw!r}") from e
        if rid in id_map:
            raise GraphError(f"duplicate node id {rid}")
        if p < 0 or t < 0:
            raise GraphError(f"negative attribute on node {rid}")
        id_map[rid] = len(nodes)
        nodes.append(NodeAttr(id=len(nodes), name=name, param_bytes=p, out_bytes=t))
    edges: list[tuple[int, int]] = []
    for raw in doc["edges"]:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise GraphError(f"malformed edge record: {raw!r}")
        src, dst = raw
        if src not in id_map or dst not in id_map:
            raise GraphError(f"dangling edge endpoint ({src}, {dst})")
        edges.append((id_map[src], id_map[dst]))
    return ComputeGraph(nodes, edges)


def serialize_graph(g: ComputeGraph) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "nodes": [
            {"id": v.id, "name": v.name, "param_bytes": v.param_bytes, "out_bytes": v.out_bytes}
            for v in g.nodes
        ],
        "edges": [[i, j] for i, j in g.edges],
    }
    return json.dumps(doc, indent=1)


def serialize_schedule(s: Schedule, producer: str, gamma: int | None = None) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "num_stages": s.num_stages,
        "assignment": {str(v): k for v, k in sorted(s.assignment.items())},
        "meta": {"producer": producer, "gamma": gamma},
    }
    return json.dumps(doc, indent=1)

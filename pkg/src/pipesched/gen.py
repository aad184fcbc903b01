"""Seeded synthetic DAG generator for solver benchmarking and trainer datasets.

Wiring is recency-biased: each node prefers parents close behind it in rank
order, which yields the deep, chain-dominated shapes of real DNN graphs while
still producing skip edges and parallel branches at higher in-degree budgets.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .graph import ComputeGraph, GraphError, NodeAttr, serialize_graph

_OP_VOCAB = ("conv", "dwconv", "bn", "relu", "add", "concat", "pool", "fc")

# Probability that a node wires to its immediate predecessor when free to
# choose; high values keep generated depth close to |V| like ImageNet CNNs.
_CHAIN_BIAS = 0.85

# Parents are drawn from the trailing `_LOCALITY` ranks only, matching the
# short skip connections of real models; this bounds the level span of every
# edge so stage cuts stay local features of the graph.
_LOCALITY = 8


@dataclass(frozen=True)
class GenSpec:
    num_nodes: int
    max_in_degree: int
    param_bytes_range: tuple[int, int] = (1024, 4 * 1024 * 1024)
    out_bytes_range: tuple[int, int] = (1024, 1024 * 1024)
    seed: int = 0
    virtual_endpoints: bool = True

    def __post_init__(self):
        if self.num_nodes < 1:
            raise GraphError("num_nodes must be >= 1")
        if self.max_in_degree < 1:
            raise GraphError("max_in_degree must be >= 1")
        for lo, hi in (self.param_bytes_range, self.out_bytes_range):
            if lo < 0 or lo > hi:
                raise GraphError(f"bad attribute range [{lo}, {hi}]")


def _pick_recency(rng: random.Random, candidates: list[int], upto: int) -> int:
    # Weight 1/(gap) so close ranks dominate but long skips stay possible.
    weights = [1.0 / (upto - r) for r in candidates]
    return rng.choices(candidates, weights=weights, k=1)[0]


def generate_dag(spec: GenSpec) -> ComputeGraph:
    """Generate one graph. Pure function of the spec: same seed, same bytes.

    With virtual endpoints the graph has exactly one global source (`start`)
    and one global sink (`end`), both with zero param/out bytes so they never
    perturb the cost objectives; interior sinks are absorbed by `end` and the
    wiring keeps the pending-sink count within max_in_degree so the bound
    holds for `end` too.
    """
    rng = random.Random(spec.seed)
    n = spec.num_nodes
    D = spec.max_in_degree

    if spec.virtual_endpoints and n < 2:
        raise GraphError("num_nodes must be >= 2 when virtual endpoints are requested")

    edges: list[tuple[int, int]] = []
    if spec.virtual_endpoints:
        interior = range(1, n - 1)
        last_rank = n - 2  # ranks 0..n-2 participate in wiring; n-1 is `end`
    else:
        interior = range(1, n)
        last_rank = n - 1

    sinks = [0]  # childless nodes so far, ascending rank
    for j in interior:
        lo = max(0, j - _LOCALITY)
        chosen: list[int] = []
        # A pending sink about to leave the locality window must be consumed
        # now or it would hang as a long edge into `end`.
        if sinks[0] <= j - _LOCALITY:
            chosen.append(sinks[0])
        # Once D sinks are pending, consume one (always rank j-1, the newest)
        # so the final sink set fits end's in-degree budget.
        if len(sinks) >= D:
            if j - 1 not in chosen:
                chosen.append(j - 1)
        elif rng.random() < _CHAIN_BIAS:
            chosen.append(j - 1)
        d = min(max(rng.randint(1, D), len(chosen)), j - lo)
        while len(chosen) < d:
            pick = _pick_recency(rng, [r for r in range(lo, j) if r not in chosen], j)
            chosen.append(pick)
        for r in sorted(chosen):
            edges.append((r, j))
        sinks = [r for r in sinks if r not in chosen]
        sinks.append(j)

    if spec.virtual_endpoints:
        if n == 2:
            edges.append((0, 1))
        else:
            for r in sinks:
                edges.append((r, n - 1))

    nodes: list[NodeAttr] = []
    p_lo, p_hi = spec.param_bytes_range
    t_lo, t_hi = spec.out_bytes_range
    for v in range(n):
        if spec.virtual_endpoints and v == 0:
            nodes.append(NodeAttr(v, "start", 0, 0))
        elif spec.virtual_endpoints and v == n - 1:
            nodes.append(NodeAttr(v, "end", 0, 0))
        else:
            kind = rng.choice(_OP_VOCAB)
            nodes.append(
                NodeAttr(v, f"{kind}_{v}", rng.randint(p_lo, p_hi), rng.randint(t_lo, t_hi))
            )
    return ComputeGraph(nodes, edges)


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    seed: int
    num_nodes: int
    max_in_degree: int
    depth: int


def generate_corpus(template: GenSpec, count: int, seed: int, out_dir: str | Path) -> list[CorpusEntry]:
    """Write `count` graph files plus manifest.json under out_dir.

    Per-graph seeds derive deterministically from the master seed, so the
    corpus is byte-reproducible and graphs may be regenerated individually.
    """
    if count < 0:
        raise GraphError("count must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = random.Random(seed)
    entries: list[CorpusEntry] = []
    for i in range(count):
        g_seed = master.getrandbits(63)
        spec = replace(template, seed=g_seed)
        g = generate_dag(spec)
        name = f"graph_{i:04d}.json"
        (out / name).write_text(serialize_graph(g), encoding="utf-8")
        entries.append(
            CorpusEntry(
                path=name,
                seed=g_seed,
                num_nodes=g.num_nodes,
                max_in_degree=spec.max_in_degree,
                depth=g.depth,
            )
        )
    manifest = {
        "format_version": 1,
        "master_seed": seed,
        "entries": [e.__dict__ for e in entries],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    return entries

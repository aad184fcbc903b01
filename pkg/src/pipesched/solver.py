"""Exact lexicographic solving over stage assignments.

solve_lex runs one depth-first branch-and-bound pass per objective tier,
pinning each minimized value as a cap for the next tier, then extracts the
lexicographically smallest assignment achieving the optimal vector so
repeated runs are byte-identical. brute_force is the independent oracle: it
enumerates the (dependence-filtered) domain product and scores leaves with
graph-core metrics, sharing no bounding logic with the search.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

from .coarse import (
    KIND_BALANCED,
    KIND_EXTERNAL,
    KIND_LIST,
    CoarseSource,
    balanced_topo_partition,
    list_schedule,
    load_coarse_schedule,
    repair_schedule,
)
from .graph import (
    DEFAULT_CACHE_BYTES,
    ComputeGraph,
    Schedule,
    schedule_metrics,
    validate_schedule,
)
from .ilp import ScheduleModel, build_model
from .relax import StageDomains, build_domains, full_domains, relax_window

log = logging.getLogger(__name__)

BRUTE_FORCE_GUARD = 10_000_000
_TIME_CHECK_MASK = 0x3FF


class InfeasibleError(RuntimeError):
    """No assignment satisfies the model; message names the constraint class."""


class SearchSpaceError(RuntimeError):
    """Brute-force domain product exceeds the enumeration guard."""


class _TimeUp(Exception):
    pass


@dataclass(frozen=True)
class SolveReport:
    schedule: Schedule
    objective_vector: tuple[int, int, int]  # (peak_mem, total_offcache, max_comm)
    proved_optimal: bool
    nodes_expanded: int
    wall_time: float
    gamma: int | None = None
    producer: CoarseSource | None = None
    coarse_objective: tuple[int, int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "objective_vector": list(self.objective_vector),
            "proved_optimal": self.proved_optimal,
            "nodes_expanded": self.nodes_expanded,
            "wall_time": self.wall_time,
            "gamma": self.gamma,
            "producer": None if self.producer is None else {"kind": self.producer.kind, "origin": self.producer.origin},
            "coarse_objective": None if self.coarse_objective is None else list(self.coarse_objective),
            "num_stages": self.schedule.num_stages,
            "assignment": {str(v): k for v, k in sorted(self.schedule.assignment.items())},
        }


class _Search:
    """One branch-and-bound pass over the free nodes of a model."""

    def __init__(self, model: ScheduleModel, order: list[int]):
        g = model.graph
        K = model.num_stages
        self.model = model
        self.K = K
        self.C = model.cache_capacity
        self.require_nonempty = model.require_nonempty
        self.order = order
        self.domains = [model.domains.domain[v] for v in order]
        self.params = [g.param_bytes[v] for v in order]

        self.cur = [-1] * g.num_nodes
        for v, k in model.frozen.items():
            self.cur[v] = k
        self.stage_mem = [0] * K
        self.stage_cnt = [0] * K
        for v, k in model.frozen.items():
            self.stage_mem[k] += g.param_bytes[v]
            self.stage_cnt[k] += 1
        self.empty_cnt = sum(1 for c in self.stage_cnt if c == 0)
        self.comm = [0] * (K - 1)

        total = sum(g.param_bytes)
        self.peak_floor = -(-total // K)
        self.off_floor = max(0, total - K * self.C)

        pos = {v: i for i, v in enumerate(order)}
        self.triggers: list[list[tuple[int, int, bool]]] = [[] for _ in order]
        frozen = model.frozen
        for a, b in g.edges:
            t = g.out_bytes[a]
            a_free, b_free = a in pos, b in pos
            if not a_free and not b_free:
                sa, sb = frozen[a], frozen[b]
                if sa < sb:
                    self.comm[sa] += t
                continue
            if a_free and (not b_free or pos[a] > pos[b]):
                self.triggers[pos[a]].append((b, t, True))  # resolves when src a is placed
            else:
                self.triggers[pos[b]].append((a, t, False))  # resolves when dst b is placed
        self.expanded = 0
        self.deadline: float | None = None

    # -- admissible lower bounds on each objective given the partial state --

    def _lb(self, tag: str) -> int:
        if tag == "peak":
            return max(self.peak_floor, max(self.stage_mem))
        if tag == "offcache":
            acc = 0
            for m in self.stage_mem:
                if m > self.C:
                    acc += m - self.C
            return acc if acc > self.off_floor else self.off_floor
        return max(self.comm) if self.comm else 0

    def _leaf_triple(self) -> tuple[int, int, int]:
        peak = max(self.stage_mem)
        off = 0
        for m in self.stage_mem:
            if m > self.C:
                off += m - self.C
        com = max(self.comm) if self.comm else 0
        return (peak, off, com)

    def run(
        self,
        values: list[list[int]],
        caps: list[tuple[str, int]],
        objective: str | None,
        best_value: int | None,
        best_assign: list[int] | None,
        first_leaf: bool = False,
    ) -> tuple[int | None, list[int] | None, tuple[int, int, int] | None]:
        """DFS over `order` with per-node candidate stage lists `values`.

        Prunes branches whose bound exceeds a cap or cannot strictly improve
        `best_value` on `objective`. With first_leaf the pass stops at the
        first surviving complete assignment (used for tie extraction and
        feasibility probes).
        """
        self._values = values
        self._caps = caps
        self._objective = objective
        self._best_value = best_value
        self._best_assign = list(best_assign) if best_assign is not None else None
        self._best_triple: tuple[int, int, int] | None = None
        self._first_leaf = first_leaf
        self._done = False
        self._dfs(0)
        return self._best_value, self._best_assign, self._best_triple

    def _dfs(self, idx: int) -> None:
        if self._done:
            return
        order = self.order
        if idx == len(order):
            if self.require_nonempty and self.empty_cnt:
                return
            triple = self._leaf_triple()
            if self._objective is None:
                self._best_assign = [self.cur[v] for v in order]
                self._best_triple = triple
                self._done = True
            else:
                value = triple[("peak", "offcache", "comm").index(self._objective)]
                if self._best_value is None or value < self._best_value:
                    self._best_value = value
                    self._best_assign = [self.cur[v] for v in order]
                    self._best_triple = triple
            return
        remaining = len(order) - idx
        if self.require_nonempty and remaining < self.empty_cnt:
            return
        v = order[idx]
        p = self.params[idx]
        trig = self.triggers[idx]
        cur = self.cur
        mem = self.stage_mem
        cnt = self.stage_cnt
        comm = self.comm
        must_fill = self.require_nonempty and remaining == self.empty_cnt
        for k in self._values[idx]:
            if must_fill and cnt[k]:
                continue
            deltas: list[tuple[int, int]] = []
            ok = True
            for other, t, v_is_src in trig:
                so = cur[other]
                if v_is_src:
                    if k > so:
                        ok = False
                        break
                    if k < so and t:
                        deltas.append((k, t))
                else:
                    if so > k:
                        ok = False
                        break
                    if so < k and t:
                        deltas.append((so, t))
            if not ok:
                continue

            cur[v] = k
            mem[k] += p
            if cnt[k] == 0:
                self.empty_cnt -= 1
            cnt[k] += 1
            for bi, t in deltas:
                comm[bi] += t
            self.expanded += 1
            if self.deadline is not None and (self.expanded & _TIME_CHECK_MASK) == 0:
                if time.monotonic() > self.deadline:
                    self._undo(v, k, p, deltas)
                    raise _TimeUp()

            pruned = False
            for tag, cap in self._caps:
                if self._lb(tag) > cap:
                    pruned = True
                    break
            if not pruned and self._objective is not None and self._best_value is not None:
                if self._lb(self._objective) >= self._best_value:
                    pruned = True
            if not pruned:
                self._dfs(idx + 1)
            self._undo(v, k, p, deltas)
            if self._done:
                return

    def _undo(self, v: int, k: int, p: int, deltas: list[tuple[int, int]]) -> None:
        self.cur[v] = -1
        self.stage_mem[k] -= p
        self.stage_cnt[k] -= 1
        if self.stage_cnt[k] == 0:
            self.empty_cnt += 1
        for bi, t in deltas:
            self.comm[bi] -= t


def _asap_order(model: ScheduleModel) -> list[int]:
    g = model.graph
    return sorted(model.free_nodes, key=lambda v: (g.levels[v], v))


def _value_lists(model: ScheduleModel, order: list[int], warm: dict[int, int] | None) -> list[list[int]]:
    out: list[list[int]] = []
    for v in order:
        dom = sorted(model.domains.domain[v])
        if warm is not None and warm[v] in dom:
            rest = [k for k in dom if k != warm[v]]
            out.append([warm[v]] + rest)
        else:
            out.append(dom)
    return out


def _synthesize_warm(model: ScheduleModel) -> dict[int, int] | None:
    g = model.graph
    K = model.num_stages
    full = tuple(range(K))
    if all(model.domains.domain[v] == full for v in range(g.num_nodes)) and K <= g.num_nodes:
        return dict(balanced_topo_partition(g, K).assignment)
    return None


def solve_lex(
    model: ScheduleModel,
    time_limit: float | None = None,
    warm_start: Schedule | None = None,
) -> SolveReport:
    """Lexicographic optimum of a ScheduleModel by staged branch-and-bound.

    Tier ordering follows model.objective_order. proved_optimal is True only
    when every tier closed within the time limit; on timeout the best
    incumbent found so far is returned, never silently degraded. Given no
    time limit the report is a pure function of the model and warm start.
    """
    t0 = time.monotonic()
    violated = model.constant_violations()
    if violated:
        raise InfeasibleError(f"infeasible model: {violated[0].family} constraint {violated[0].name}")

    warm = dict(warm_start.assignment) if warm_start is not None else _synthesize_warm(model)
    if warm is not None and not model.is_feasible(warm):
        warm = None

    order = _asap_order(model)
    search = _Search(model, order)
    search.deadline = None if time_limit is None else t0 + time_limit
    values = _value_lists(model, order, warm)

    if warm is not None:
        warm_triple, _ = model.evaluate_assignment(warm)
        best_assign: list[int] | None = [warm[v] for v in order]
        best_triple: tuple[int, int, int] | None = warm_triple
    else:
        best_assign = None
        best_triple = None

    tag_index = {"peak": 0, "offcache": 1, "comm": 2}
    caps: list[tuple[str, int]] = []
    timed_out = False
    tiers_closed = 0
    for tag, _expr in model.objectives:
        init_value = best_triple[tag_index[tag]] if best_triple is not None else None
        try:
            value, assign, triple = search.run(values, caps, tag, init_value, best_assign)
        except _TimeUp:
            timed_out = True
            break
        if assign is None:
            probe_ok = _feasibility_probe(model, order)
            klass = "nonempty" if probe_ok else "dependence"
            raise InfeasibleError(f"infeasible model: {klass} constraints admit no assignment")
        best_assign = assign
        if triple is not None:
            best_triple = triple
        else:
            best_triple = model.evaluate_assignment(_decode(model, order, assign))[0]
        caps.append((tag, best_triple[tag_index[tag]]))
        tiers_closed += 1

    if best_assign is None:
        raise InfeasibleError("infeasible model: time limit hit before any feasible assignment was found")

    proved = tiers_closed == len(model.objectives) and not timed_out
    if proved and order:
        extract_order = sorted(model.free_nodes)
        extractor = _Search(model, extract_order)
        extractor.deadline = search.deadline
        evalues = _value_lists(model, extract_order, None)
        try:
            _, assign, _ = extractor.run(evalues, caps, None, None, None, first_leaf=True)
            if assign is not None:
                by_node = dict(zip(extract_order, assign))
                best_assign = [by_node[v] for v in order]
        except _TimeUp:
            pass  # keep the tier incumbent; optimality of the vector is unaffected
        search.expanded += extractor.expanded

    assignment = _decode(model, order, best_assign)
    triple, _ = model.evaluate_assignment(assignment)
    return SolveReport(
        schedule=Schedule(model.num_stages, assignment),
        objective_vector=triple,
        proved_optimal=proved,
        nodes_expanded=search.expanded,
        wall_time=time.monotonic() - t0,
    )


def _decode(model: ScheduleModel, order: list[int], assign: list[int]) -> dict[int, int]:
    full = dict(model.frozen)
    for v, k in zip(order, assign):
        full[v] = k
    return full


def _feasibility_probe(model: ScheduleModel, order: list[int]) -> bool:
    """True if dependence constraints alone admit an assignment (used to name
    the violated class when the full search comes back empty)."""
    probe = _Search(model, order)
    probe.require_nonempty = False
    values = _value_lists(model, order, None)
    _, assign, _ = probe.run(values, [], None, None, None, first_leaf=True)
    return assign is not None


def brute_force(
    g: ComputeGraph,
    num_stages: int,
    domains: StageDomains,
    cache_capacity: int = DEFAULT_CACHE_BYTES,
    require_nonempty: bool = True,
) -> SolveReport:
    """Exhaustive oracle: enumerate the domain product in node-id order,
    filter by dependence and the non-empty-stage policy, score every survivor
    with graph-core's schedule_metrics, return the lexicographic minimum
    (ties: smallest assignment vector). Always proved optimal."""
    t0 = time.monotonic()
    size = domains.size_product()
    if size > BRUTE_FORCE_GUARD:
        raise SearchSpaceError(f"domain product {size} exceeds guard {BRUTE_FORCE_GUARD}")
    n = g.num_nodes
    doms = [sorted(domains.domain[v]) for v in range(n)]
    cur = [-1] * n
    best: dict = {"vector": None, "assign": None, "count": 0}

    def leaf() -> None:
        best["count"] += 1
        s = Schedule(num_stages, {v: cur[v] for v in range(n)})
        if require_nonempty and len(set(cur)) != num_stages:
            return
        m = schedule_metrics(g, s, cache_capacity)
        if best["vector"] is None or m.objective_vector < best["vector"]:
            best["vector"] = m.objective_vector
            best["assign"] = list(cur)

    def rec(v: int) -> None:
        if v == n:
            leaf()
            return
        for k in doms[v]:
            ok = True
            for u in g.preds(v):
                if cur[u] > k and cur[u] != -1:
                    ok = False
                    break
            if ok:
                for w in g.succs(v):
                    if cur[w] != -1 and cur[w] < k:
                        ok = False
                        break
            if ok:
                cur[v] = k
                rec(v + 1)
                cur[v] = -1

    rec(0)
    if best["vector"] is None:
        raise InfeasibleError("no valid assignment")
    assignment = {v: best["assign"][v] for v in range(n)}
    return SolveReport(
        schedule=Schedule(num_stages, assignment),
        objective_vector=best["vector"],
        proved_optimal=True,
        nodes_expanded=best["count"],
        wall_time=time.monotonic() - t0,
    )


def resolve_coarse(g: ComputeGraph, num_stages: int, source: CoarseSource) -> Schedule:
    if source.kind == KIND_BALANCED:
        return balanced_topo_partition(g, num_stages)
    if source.kind == KIND_LIST:
        return list_schedule(g, num_stages)
    if source.kind == KIND_EXTERNAL:
        return load_coarse_schedule(source.origin, g, num_stages)
    raise ValueError(f"unknown coarse source kind: {source.kind}")


def inc_ilp(
    g: ComputeGraph,
    num_stages: int,
    gamma: int,
    source: CoarseSource,
    cache_capacity: int = DEFAULT_CACHE_BYTES,
    time_limit: float | None = None,
    objective_order: tuple[str, str, str] = ("peak", "offcache", "comm"),
) -> SolveReport:
    """Composed pipeline: coarse schedule -> repair if needed -> relaxation
    window at gamma -> domains -> exact lexicographic refinement."""
    t0 = time.monotonic()
    coarse = resolve_coarse(g, num_stages, source)
    if not validate_schedule(g, coarse).ok:
        log.info("coarse schedule from %s invalid; applying repair", source.kind)
        coarse = repair_schedule(g, coarse)
    coarse_triple = schedule_metrics(g, coarse, cache_capacity).objective_vector

    window = relax_window(g, coarse, gamma)
    domains = build_domains(g, coarse, window, num_stages)
    model = build_model(g, num_stages, domains, cache_capacity, objective_order=objective_order)
    report = solve_lex(model, time_limit=time_limit, warm_start=coarse)
    idx = {"peak": 0, "offcache": 1, "comm": 2}
    permute = lambda vec: tuple(vec[idx[tag]] for tag in objective_order)
    if report.proved_optimal and permute(report.objective_vector) > permute(coarse_triple):
        raise RuntimeError(
            f"internal invariant failure: refined vector {report.objective_vector} "
            f"worse than coarse {coarse_triple}"
        )
    return replace(
        report,
        gamma=gamma,
        producer=source,
        coarse_objective=coarse_triple,
        wall_time=time.monotonic() - t0,
    )


def solve_exact(
    g: ComputeGraph,
    num_stages: int,
    cache_capacity: int = DEFAULT_CACHE_BYTES,
    time_limit: float | None = None,
    objective_order: tuple[str, str, str] = ("peak", "offcache", "comm"),
) -> SolveReport:
    """Full exact solve over unrestricted domains (gamma reported as null)."""
    model = build_model(g, num_stages, full_domains(g, num_stages), cache_capacity,
                        objective_order=objective_order)
    return solve_lex(model, time_limit=time_limit)

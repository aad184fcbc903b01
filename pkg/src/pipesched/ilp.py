"""Integer-program construction for stage assignment.

The model is a self-contained symbolic artifact: binary assignment variables,
linear constraints tagged by family, and an ordered objective vector
(peak memory, total off-cache, max boundary communication). Nodes with
singleton domains are substituted as constants rather than constrained, so a
tightly relaxed model is structurally smaller, not just easier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import DEFAULT_CACHE_BYTES, ComputeGraph
from .relax import StageDomains

OBJECTIVE_TAGS = ("peak", "offcache", "comm")


class ModelError(ValueError):
    """Raised for structurally invalid model inputs (empty domain, K < 1)."""


@dataclass(frozen=True)
class Var:
    name: str
    kind: str  # "binary" | "integer"
    lb: int = 0
    ub: int | None = None


class LinExpr:
    """Linear expression: sum of coeff * var plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: dict[str, int] | None = None, const: int = 0):
        self.terms = dict(terms) if terms else {}
        self.const = const

    def add(self, name: str, coeff: int) -> None:
        c = self.terms.get(name, 0) + coeff
        if c:
            self.terms[name] = c
        else:
            self.terms.pop(name, None)

    def evaluate(self, values: dict[str, int]) -> int:
        return self.const + sum(c * values[n] for n, c in self.terms.items())

    def is_const(self) -> bool:
        return not self.terms


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    lhs: LinExpr
    sense: str  # "<=" | ">=" | "=="
    rhs: int

    def satisfied(self, values: dict[str, int]) -> bool:
        v = self.lhs.evaluate(values)
        if self.sense == "<=":
            return v <= self.rhs
        if self.sense == ">=":
            return v >= self.rhs
        return v == self.rhs


def and_constraints(x: Var, y: Var, z: Var, name: str = "and") -> list[Constraint]:
    """Linearization of z = x AND y over binaries:
    z >= x + y - 1, z <= x, z <= y."""
    return [
        Constraint(f"{name}_ge", "and", LinExpr({x.name: 1, y.name: 1, z.name: -1}), "<=", 1),
        Constraint(f"{name}_le_x", "and", LinExpr({z.name: 1, x.name: -1}), "<=", 0),
        Constraint(f"{name}_le_y", "and", LinExpr({z.name: 1, y.name: -1}), "<=", 0),
    ]


def crossing_constraints(
    stage_i: LinExpr, stage_j: LinExpr, b: Var, num_stages: int, name: str = "crossing"
) -> list[Constraint]:
    """Force b = [stage_i < stage_j] for every integral pair in [0, K-1]^2:
    stage_j - stage_i <= (K-1) * b and stage_i - stage_j + K * b <= K - 1."""
    K = num_stages
    hi = LinExpr({b.name: -(K - 1)})
    lo = LinExpr({b.name: K})
    for n, c in stage_i.terms.items():
        hi.add(n, -c)
        lo.add(n, c)
    for n, c in stage_j.terms.items():
        hi.add(n, c)
        lo.add(n, -c)
    hi.const += stage_j.const - stage_i.const
    lo.const += stage_i.const - stage_j.const
    return [
        Constraint(f"{name}_hi", "crossing", hi, "<=", 0),
        Constraint(f"{name}_lo", "crossing", lo, "<=", K - 1),
    ]


@dataclass
class ScheduleModel:
    """Symbolic integer program plus the data the exact solver searches over."""

    graph: ComputeGraph
    num_stages: int
    domains: StageDomains
    cache_capacity: int
    require_nonempty: bool
    objective_order: tuple[str, str, str]
    x_vars: dict[tuple[int, int], Var] = field(default_factory=dict)
    b_vals: list[Var | int] = field(default_factory=list)
    a_vals: dict[tuple[int, int], Var | int] = field(default_factory=dict)
    m_vars: list[Var] = field(default_factory=list)
    o_vars: list[Var] = field(default_factory=list)
    c_vars: list[Var] = field(default_factory=list)
    m_peak_var: Var | None = None
    com_max_var: Var | None = None
    constraints: list[Constraint] = field(default_factory=list)
    objectives: list[tuple[str, LinExpr]] = field(default_factory=list)
    frozen: dict[int, int] = field(default_factory=dict)
    free_nodes: list[int] = field(default_factory=list)

    def family_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.constraints:
            counts[c.family] = counts.get(c.family, 0) + 1
        return counts

    def constant_violations(self) -> list[Constraint]:
        """Constraints already false after constant folding: the model is
        infeasible before any search."""
        return [c for c in self.constraints if c.lhs.is_const() and not c.satisfied({})]

    def stage_expr(self, v: int) -> LinExpr:
        if v in self.frozen:
            return LinExpr(const=self.frozen[v])
        e = LinExpr()
        for k in self.domains.domain[v]:
            if k:
                e.add(self.x_vars[(v, k)].name, k)
        return e

    def is_feasible(self, assignment: dict[int, int]) -> bool:
        g = self.graph
        for v in range(g.num_nodes):
            if assignment[v] not in self.domains.domain[v]:
                return False
        for i, j in g.edges:
            if assignment[i] > assignment[j]:
                return False
        if self.require_nonempty:
            used = set(assignment.values())
            if len(used) != self.num_stages:
                return False
        return True

    def evaluate_assignment(self, assignment: dict[int, int]) -> tuple[tuple[int, int, int], dict[str, int]]:
        """Canonical variable values at an integral point: derived variables
        take their tightest feasible settings, so the returned objective
        triple is what the lexicographic solve would score."""
        g = self.graph
        K = self.num_stages
        values: dict[str, int] = {}
        for (v, k), var in self.x_vars.items():
            values[var.name] = 1 if assignment[v] == k else 0
        for ei, (i, j) in enumerate(g.edges):
            crossing = 1 if assignment[i] < assignment[j] else 0
            b = self.b_vals[ei]
            if isinstance(b, Var):
                values[b.name] = crossing
            for k in range(K - 1):
                a = self.a_vals.get((ei, k))
                if isinstance(a, Var) and a.name not in values:
                    values[a.name] = 1 if (crossing and assignment[i] == k) else 0
        mem = [0] * K
        for v in range(g.num_nodes):
            mem[assignment[v]] += g.param_bytes[v]
        comm = [0] * (K - 1)
        for i, j in g.edges:
            if assignment[i] < assignment[j]:
                comm[assignment[i]] += g.out_bytes[i]
        off = [max(0, m - self.cache_capacity) for m in mem]
        for k in range(K):
            values[self.m_vars[k].name] = mem[k]
            values[self.o_vars[k].name] = off[k]
        for k in range(K - 1):
            values[self.c_vars[k].name] = comm[k]
        peak = max(mem)
        max_comm = max(comm) if comm else 0
        values[self.m_peak_var.name] = peak
        if self.com_max_var is not None:
            values[self.com_max_var.name] = max_comm
        return (peak, sum(off), max_comm), values


def build_model(
    g: ComputeGraph,
    num_stages: int,
    domains: StageDomains,
    cache_capacity: int = DEFAULT_CACHE_BYTES,
    require_nonempty: bool = True,
    objective_order: tuple[str, str, str] = OBJECTIVE_TAGS,
) -> ScheduleModel:
    if num_stages < 1:
        raise ModelError("num_stages must be >= 1")
    if sorted(objective_order) != sorted(OBJECTIVE_TAGS):
        raise ModelError(f"objective_order must permute {OBJECTIVE_TAGS}")
    K = num_stages
    for v in range(g.num_nodes):
        dom = domains.domain.get(v)
        if not dom:
            raise ModelError(f"empty domain for node {v}")
        if any(not (0 <= k < K) for k in dom):
            raise ModelError(f"domain of node {v} outside [0, {K - 1}]")

    model = ScheduleModel(
        graph=g,
        num_stages=K,
        domains=domains,
        cache_capacity=cache_capacity,
        require_nonempty=require_nonempty,
        objective_order=tuple(objective_order),
    )
    cons = model.constraints

    for v in range(g.num_nodes):
        dom = domains.domain[v]
        if len(dom) == 1:
            model.frozen[v] = dom[0]
        else:
            model.free_nodes.append(v)
            for k in dom:
                model.x_vars[(v, k)] = Var(f"x_{v}_{k}", "binary", 0, 1)
            e = LinExpr({model.x_vars[(v, k)].name: 1 for k in dom})
            cons.append(Constraint(f"assign_{v}", "exactly_one", e, "==", 1))

    for ei, (i, j) in enumerate(g.edges):
        si, sj = model.stage_expr(i), model.stage_expr(j)
        dep = LinExpr(dict(si.terms), si.const)
        for n, c in sj.terms.items():
            dep.add(n, -c)
        dep.const -= sj.const
        if not dep.is_const() or dep.const > 0:
            cons.append(Constraint(f"dep_{ei}", "dependence", dep, "<=", 0))

        diff_const_only = si.is_const() and sj.is_const()
        if diff_const_only:
            model.b_vals.append(1 if sj.const > si.const else 0)
        else:
            b = Var(f"b_{ei}", "binary", 0, 1)
            model.b_vals.append(b)
            cons.extend(crossing_constraints(si, sj, b, K, name=f"crossing_{ei}"))

    for ei, (i, j) in enumerate(g.edges):
        b = model.b_vals[ei]
        for k in range(K - 1):
            if i in model.frozen:
                u: Var | int = 1 if model.frozen[i] == k else 0
            else:
                u = model.x_vars.get((i, k), 0)
            if isinstance(u, int) and u == 0:
                model.a_vals[(ei, k)] = 0
            elif isinstance(b, int) and b == 0:
                model.a_vals[(ei, k)] = 0
            elif isinstance(u, int) and isinstance(b, int):
                model.a_vals[(ei, k)] = 1
            elif isinstance(u, int):
                model.a_vals[(ei, k)] = b
            elif isinstance(b, int):
                model.a_vals[(ei, k)] = u
            else:
                a = Var(f"a_{ei}_{k}", "binary", 0, 1)
                model.a_vals[(ei, k)] = a
                cons.extend(and_constraints(u, b, a, name=f"and_{ei}_{k}"))

    model.m_peak_var = Var("m_peak", "integer", 0, None)
    for k in range(K):
        m = Var(f"m_{k}", "integer", 0, None)
        o = Var(f"o_{k}", "integer", 0, None)
        model.m_vars.append(m)
        model.o_vars.append(o)
        mem = LinExpr({m.name: -1})
        for v in model.free_nodes:
            if (v, k) in model.x_vars and g.param_bytes[v]:
                mem.add(model.x_vars[(v, k)].name, g.param_bytes[v])
        mem.const = sum(g.param_bytes[v] for v, kk in model.frozen.items() if kk == k)
        cons.append(Constraint(f"mem_def_{k}", "mem_def", mem, "==", 0))
        cons.append(
            Constraint(f"peak_{k}", "peak", LinExpr({m.name: 1, model.m_peak_var.name: -1}), "<=", 0)
        )
        cons.append(
            Constraint(f"offcache_{k}", "offcache", LinExpr({m.name: 1, o.name: -1}), "<=", cache_capacity)
        )

    if K > 1:
        model.com_max_var = Var("com_max", "integer", 0, None)
        for k in range(K - 1):
            c = Var(f"c_{k}", "integer", 0, None)
            model.c_vars.append(c)
            comm = LinExpr({c.name: -1})
            for ei, (i, j) in enumerate(g.edges):
                t = g.out_bytes[i]
                if not t:
                    continue
                a = model.a_vals[(ei, k)]
                if isinstance(a, Var):
                    comm.add(a.name, t)
                elif a:
                    comm.const += t
            cons.append(Constraint(f"comm_def_{k}", "comm_def", comm, "==", 0))
            cons.append(
                Constraint(f"comm_max_{k}", "comm_max", LinExpr({c.name: 1, model.com_max_var.name: -1}), "<=", 0)
            )

    if require_nonempty:
        for k in range(K):
            if any(kk == k for kk in model.frozen.values()):
                continue  # a frozen node already pins the stage non-empty
            e = LinExpr()
            for v in model.free_nodes:
                if (v, k) in model.x_vars:
                    e.add(model.x_vars[(v, k)].name, 1)
            cons.append(Constraint(f"nonempty_{k}", "nonempty", e, ">=", 1))

    off_total = LinExpr()
    for o in model.o_vars:
        off_total.add(o.name, 1)
    exprs = {
        "peak": LinExpr({model.m_peak_var.name: 1}),
        "offcache": off_total,
        "comm": LinExpr({model.com_max_var.name: 1}) if model.com_max_var else LinExpr(const=0),
    }
    model.objectives = [(tag, exprs[tag]) for tag in model.objective_order]
    return model


def lp_export(model: ScheduleModel) -> str:
    """CPLEX-LP-style text. One Minimize section per lexicographic tier,
    priority 1 solved first; tiers 2 and 3 are comment blocks to keep the
    document loadable by single-objective solvers (see README for the
    re-solve recipe)."""

    def fmt(e: LinExpr, with_const: bool = False) -> str:
        parts: list[str] = []
        for name in sorted(e.terms):
            c = e.terms[name]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            coeff = "" if mag == 1 else f"{mag} "
            parts.append(f"{sign} {coeff}{name}")
        if with_const and e.const:
            parts.append(f"{'-' if e.const < 0 else '+'} {abs(e.const)}")
        if not parts:
            return "0"
        head = parts[0]
        head = head[2:] if head.startswith("+ ") else "- " + head[2:]
        return " ".join([head] + parts[1:])

    lines: list[str] = ["\\ lexicographic schedule model; format_version 1"]
    for prio, (tag, expr) in enumerate(model.objectives, start=1):
        if prio == 1:
            lines.append(f"\\ lex-priority 1 ({tag})")
            lines.append("Minimize")
            lines.append(f" obj_{tag}: {fmt(expr)}")
        else:
            lines.append(f"\\ lex-priority {prio} ({tag}): minimize {fmt(expr)}")
    lines.append("Subject To")
    for c in model.constraints:
        sense = {"<=": "<=", ">=": ">=", "==": "="}[c.sense]
        lines.append(f" {c.name}: {fmt(c.lhs)} {sense} {c.rhs - c.lhs.const}")
    lines.append("Bounds")
    binaries: list[str] = []
    generals: list[str] = []
    seen: set[str] = set()
    all_vars: list[Var] = list(model.x_vars.values())
    all_vars += [b for b in model.b_vals if isinstance(b, Var)]
    all_vars += [a for a in model.a_vals.values() if isinstance(a, Var)]
    all_vars += model.m_vars + model.o_vars + model.c_vars
    all_vars.append(model.m_peak_var)
    if model.com_max_var:
        all_vars.append(model.com_max_var)
    for var in all_vars:
        if var.name in seen:
            continue
        seen.add(var.name)
        if var.kind == "binary":
            binaries.append(var.name)
        else:
            generals.append(var.name)
            ub = "+inf" if var.ub is None else str(var.ub)
            lines.append(f" {var.lb} <= {var.name} <= {ub}")
    if generals:
        lines.append("Generals")
        lines.append(" " + " ".join(generals))
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"

"""Pipeline-stage scheduling for computation graphs.

Assigns DAG operators to K pipeline stages by composing a coarse heuristic
schedule, a topological relaxation window, and exact lexicographic
integer-program refinement over (peak memory, total off-cache memory,
max boundary communication).
"""

from .coarse import (
    CoarseSource,
    balanced_topo_partition,
    list_schedule,
    load_coarse_schedule,
    repair_schedule,
)
from .gen import GenSpec, generate_corpus, generate_dag
from .graph import (
    DEFAULT_CACHE_BYTES,
    ComputeGraph,
    GraphError,
    NodeAttr,
    Schedule,
    ScheduleError,
    ScheduleMetrics,
    ValidationReport,
    asap_levels,
    parse_graph,
    schedule_metrics,
    serialize_graph,
    serialize_schedule,
    validate_schedule,
)
from .ilp import ScheduleModel, and_constraints, build_model, crossing_constraints, lp_export
from .relax import RelaxWindow, StageDomains, boundary_edges, build_domains, full_domains, relax_window
from .solver import (
    InfeasibleError,
    SearchSpaceError,
    SolveReport,
    brute_force,
    inc_ilp,
    solve_exact,
    solve_lex,
)

__all__ = [
    "CoarseSource",
    "ComputeGraph",
    "DEFAULT_CACHE_BYTES",
    "GenSpec",
    "GraphError",
    "InfeasibleError",
    "NodeAttr",
    "RelaxWindow",
    "Schedule",
    "ScheduleError",
    "ScheduleMetrics",
    "ScheduleModel",
    "SearchSpaceError",
    "SolveReport",
    "StageDomains",
    "ValidationReport",
    "and_constraints",
    "asap_levels",
    "balanced_topo_partition",
    "boundary_edges",
    "brute_force",
    "build_domains",
    "build_model",
    "crossing_constraints",
    "full_domains",
    "generate_corpus",
    "generate_dag",
    "inc_ilp",
    "list_schedule",
    "load_coarse_schedule",
    "lp_export",
    "parse_graph",
    "relax_window",
    "repair_schedule",
    "schedule_metrics",
    "serialize_graph",
    "serialize_schedule",
    "solve_exact",
    "solve_lex",
    "validate_schedule",
]

"""Command-line driver: corpus generation, single-instance scheduling,
gamma-convergence sweeps, method-comparison tables, and label export for
training coarse schedulers.

Every run directory gets a config.json; result CSVs are deterministic for a
fixed seed and configuration apart from wall-time columns.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .coarse import KIND_BALANCED, KIND_EXTERNAL, KIND_LIST, CoarseSource, repair_schedule
from .gen import GenSpec, generate_corpus, generate_dag
from .graph import (
    DEFAULT_CACHE_BYTES,
    ComputeGraph,
    parse_graph,
    schedule_metrics,
    serialize_graph,
    serialize_schedule,
    validate_schedule,
)
from .ilp import build_model, lp_export
from .relax import build_domains, relax_window
from .solver import SolveReport, inc_ilp, resolve_coarse, solve_exact

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCUMBENT = 3
EXIT_INVALID = 4

COMPARE_COLUMNS = [
    "instance", "method", "gamma", "m_peak", "total_offcache", "com_max",
    "proved_optimal", "nodes_expanded", "wall_time_s",
]
SWEEP_COLUMNS = [
    "gamma", "m_peak", "total_offcache", "com_max", "gap_pct",
    "nodes_expanded", "wall_time_s",
]


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str | None = None
    corpus: str | None = None
    stages: int | None = None
    gamma: int | None = None
    gamma_range: tuple[int, int] | None = None
    coarse: str = "balanced"
    cache_bytes: int = DEFAULT_CACHE_BYTES
    time_limit_s: float | None = None
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    mode: str = "inc"
    dump_domains: bool = False
    objective_order: tuple[str, str, str] = ("peak", "offcache", "comm")

    def write(self, out_dir: Path) -> None:
        doc = {"format_version": 1, **dataclasses.asdict(self)}
        (out_dir / "config.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")


def _coarse_source(spec: str) -> CoarseSource:
    if spec == "balanced":
        return CoarseSource(KIND_BALANCED, "balanced_topo_partition")
    if spec == "list":
        return CoarseSource(KIND_LIST, "list_schedule")
    if spec.startswith("file:"):
        return CoarseSource(KIND_EXTERNAL, spec[len("file:"):])
    raise argparse.ArgumentTypeError(f"unknown coarse source {spec!r} (use balanced, list, or file:PATH)")


def _load_graph(path: str) -> ComputeGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def _producer_string(source: CoarseSource) -> str:
    if source.kind == KIND_EXTERNAL:
        return f"{KIND_EXTERNAL}:{source.origin}"
    return source.kind


def _write_report(out: Path, report: SolveReport, producer: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "schedule.json").write_text(
        serialize_schedule(report.schedule, producer=producer, gamma=report.gamma), encoding="utf-8"
    )
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1), encoding="utf-8")


def cmd_schedule(cfg: RunConfig) -> int:
    g = _load_graph(cfg.graph)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out)
    source = _coarse_source(cfg.coarse)

    if cfg.mode == "exact":
        report = solve_exact(g, cfg.stages, cfg.cache_bytes, cfg.time_limit_s,
                             objective_order=cfg.objective_order)
        producer = "exact"
    elif cfg.mode == "coarse":
        coarse = resolve_coarse(g, cfg.stages, source)
        if not validate_schedule(g, coarse).ok:
            coarse = repair_schedule(g, coarse)
        m = schedule_metrics(g, coarse, cfg.cache_bytes)
        report = SolveReport(
            schedule=coarse, objective_vector=m.objective_vector, proved_optimal=False,
            nodes_expanded=0, wall_time=0.0, gamma=None, producer=source,
        )
        producer = _producer_string(source)
    else:
        gamma = cfg.gamma if cfg.gamma is not None else 0
        report = inc_ilp(g, cfg.stages, gamma, source, cfg.cache_bytes, cfg.time_limit_s,
                         objective_order=cfg.objective_order)
        producer = _producer_string(source)

    _write_report(out, report, producer)
    if cfg.mode == "inc" and cfg.dump_domains:
        coarse = resolve_coarse(g, cfg.stages, source)
        if not validate_schedule(g, coarse).ok:
            coarse = repair_schedule(g, coarse)
        window = relax_window(g, coarse, report.gamma)
        domains = build_domains(g, coarse, window, cfg.stages)
        (out / "window.json").write_text(window.to_json(), encoding="utf-8")
        (out / "domains.json").write_text(domains.to_json(), encoding="utf-8")
    vec = report.objective_vector
    print(f"objective_vector=({vec[0]}, {vec[1]}, {vec[2]}) proved_optimal={report.proved_optimal} "
          f"nodes_expanded={report.nodes_expanded}")
    return EXIT_OK if report.proved_optimal else EXIT_INCUMBENT


def cmd_sweep(cfg: RunConfig) -> int:
    g = _load_graph(cfg.graph)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out)
    source = _coarse_source(cfg.coarse)
    lo, hi = cfg.gamma_range

    exact = solve_exact(g, cfg.stages, cfg.cache_bytes, cfg.time_limit_s)
    optimum = exact.objective_vector if exact.proved_optimal else None
    if optimum is None:
        log.warning("full solve hit the time limit; gap column unavailable")

    rows = []
    gamma_star = None
    cache: dict[frozenset, SolveReport] = {}
    for gamma in range(lo, hi + 1):
        coarse = resolve_coarse(g, cfg.stages, source)
        if not validate_schedule(g, coarse).ok:
            coarse = repair_schedule(g, coarse)
        key = frozenset(relax_window(g, coarse, gamma).free_nodes)
        if key in cache:
            report = dataclasses.replace(cache[key], gamma=gamma)
        else:
            report = inc_ilp(g, cfg.stages, gamma, source, cfg.cache_bytes, cfg.time_limit_s)
            cache[key] = report
        vec = report.objective_vector
        if optimum is not None:
            gap = 100.0 * (vec[0] - optimum[0]) / optimum[0] if optimum[0] else 0.0
            if gamma_star is None and vec == optimum:
                gamma_star = gamma
            gap_cell = f"{gap:.6f}"
        else:
            gap_cell = ""
        rows.append([gamma, vec[0], vec[1], vec[2], gap_cell, report.nodes_expanded, f"{report.wall_time:.6f}"])

    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    summary = {
        "format_version": 1,
        "gamma_star": gamma_star,
        "optimum": list(optimum) if optimum else None,
        "exact_proved": exact.proved_optimal,
        "exact_nodes_expanded": exact.nodes_expanded,
        "depth": g.depth,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1), encoding="utf-8")
    print(f"swept gamma {lo}..{hi}; gamma_star={gamma_star}")
    return EXIT_OK


def _compare_one(args: tuple) -> list[dict]:
    graph_path, name, stages, gamma, coarse, cache_bytes, time_limit = args
    g = _load_graph(graph_path)
    source = _coarse_source(coarse)
    rows: list[dict] = []

    exact = solve_exact(g, stages, cache_bytes, time_limit)
    rows.append(_row(name, "exact", None, exact))

    coarse_sched = resolve_coarse(g, stages, source)
    if not validate_schedule(g, coarse_sched).ok:
        coarse_sched = repair_schedule(g, coarse_sched)
    m = schedule_metrics(g, coarse_sched, cache_bytes)
    coarse_report = SolveReport(
        schedule=coarse_sched, objective_vector=m.objective_vector,
        proved_optimal=exact.proved_optimal and m.objective_vector == exact.objective_vector,
        nodes_expanded=0, wall_time=0.0,
    )
    rows.append(_row(name, "coarse", None, coarse_report))

    inc = inc_ilp(g, stages, gamma, source, cache_bytes, time_limit)
    rows.append(_row(name, "inc", gamma, inc))
    return rows


def _row(instance: str, method: str, gamma: int | None, report: SolveReport) -> dict:
    vec = report.objective_vector
    return {
        "instance": instance,
        "method": method,
        "gamma": "" if gamma is None else gamma,
        "m_peak": vec[0],
        "total_offcache": vec[1],
        "com_max": vec[2],
        "proved_optimal": report.proved_optimal,
        "nodes_expanded": report.nodes_expanded,
        "wall_time_s": f"{report.wall_time:.6f}",
        "_schedule": report.schedule,
        "_report": report,
    }


def cmd_compare(cfg: RunConfig) -> int:
    corpus = Path(cfg.corpus)
    manifest = json.loads((corpus / "manifest.json").read_text(encoding="utf-8"))
    entries = manifest["entries"]
    if not entries:
        print("error: empty corpus", file=sys.stderr)
        return EXIT_USAGE
    if cfg.coarse.startswith("file:"):
        print("error: compare supports only built-in coarse producers", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "schedules").mkdir(exist_ok=True)
    cfg.write(out)

    tasks = [
        (str(corpus / e["path"]), e["path"], cfg.stages, cfg.gamma or 0, cfg.coarse,
         cfg.cache_bytes, cfg.time_limit_s)
        for e in entries
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            all_rows = list(pool.map(_compare_one, tasks))
    else:
        all_rows = [_compare_one(t) for t in tasks]

    flat: list[dict] = []
    for rows in all_rows:
        flat.extend(rows)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARE_COLUMNS)
        for r in flat:
            w.writerow([r[c] for c in COMPARE_COLUMNS])
    for r in flat:
        name = f"{Path(r['instance']).stem}_{r['method']}.json"
        producer = r["method"] if r["method"] != "inc" else cfg.coarse
        (out / "schedules" / name).write_text(
            serialize_schedule(r["_schedule"], producer=producer, gamma=r["_report"].gamma),
            encoding="utf-8",
        )

    by_method: dict[str, list[dict]] = {"exact": [], "coarse": [], "inc": []}
    for r in flat:
        by_method[r["method"]].append(r)
    ratios = []
    speedups = []
    for ex, inc in zip(by_method["exact"], by_method["inc"]):
        if inc["nodes_expanded"]:
            ratios.append(ex["nodes_expanded"] / inc["nodes_expanded"])
        if float(inc["wall_time_s"]) > 0:
            speedups.append(float(ex["wall_time_s"]) / float(inc["wall_time_s"]))
    summary = {
        "format_version": 1,
        "num_instances": len(entries),
        "mean_effort_ratio": sum(ratios) / len(ratios) if ratios else None,
        "mean_walltime_speedup": sum(speedups) / len(speedups) if speedups else None,
        "optimal_pct": {
            m: 100.0 * sum(1 for r in rows if r["proved_optimal"]) / len(rows) if rows else 0.0
            for m, rows in by_method.items()
        },
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1), encoding="utf-8")
    print(f"compared {len(entries)} instances; mean effort ratio "
          f"{summary['mean_effort_ratio']}")
    return EXIT_OK


def cmd_export_labels(cfg: RunConfig, num_nodes: int, deg: int, count: int) -> int:
    out = Path(cfg.out)
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(exist_ok=True)
    cfg.write(out)
    import random

    master = random.Random(cfg.seed)
    entries = []
    skipped = 0
    for i in range(count):
        g_seed = master.getrandbits(63)
        g = generate_dag(GenSpec(num_nodes=num_nodes, max_in_degree=deg, seed=g_seed))
        report = solve_exact(g, cfg.stages, cfg.cache_bytes, cfg.time_limit_s)
        if not report.proved_optimal:
            log.warning("instance %d timed out; skipped", i)
            skipped += 1
            continue
        g_name = f"graph_{i:04d}.json"
        l_name = f"label_{i:04d}.json"
        (out / "graphs" / g_name).write_text(serialize_graph(g), encoding="utf-8")
        (out / "labels" / l_name).write_text(
            serialize_schedule(report.schedule, producer="exact", gamma=None), encoding="utf-8"
        )
        entries.append({
            "graph": f"graphs/{g_name}",
            "label": f"labels/{l_name}",
            "seed": g_seed,
            "num_nodes": g.num_nodes,
            "max_in_degree": deg,
            "depth": g.depth,
            "objective_vector": list(report.objective_vector),
        })
    manifest = {
        "format_version": 1,
        "num_stages": cfg.stages,
        "master_seed": cfg.seed,
        "skipped": skipped,
        "entries": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    print(f"exported {len(entries)} labeled pairs ({skipped} skipped)")
    return EXIT_OK


def cmd_generate(cfg: RunConfig, num_nodes: int, degs: list[int], count: int) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    all_entries = []
    for d_idx, deg in enumerate(degs):
        sub = out / f"deg{deg}" if len(degs) > 1 else out
        template = GenSpec(num_nodes=num_nodes, max_in_degree=deg, seed=0)
        entries = generate_corpus(template, count, cfg.seed + d_idx, sub)
        all_entries.extend(entries)
    print(f"generated {len(all_entries)} graphs under {out}")
    return EXIT_OK


def cmd_validate(graph_path: str, schedule_path: str) -> int:
    from .coarse import load_coarse_schedule

    g = _load_graph(graph_path)
    doc = json.loads(Path(schedule_path).read_text(encoding="utf-8"))
    s = load_coarse_schedule(schedule_path, g, int(doc["num_stages"]))
    report = validate_schedule(g, s)
    if report.ok:
        m = schedule_metrics(g, s)
        print(f"ok objective_vector=({m.peak_mem}, {m.total_offcache}, {m.max_comm})")
        return EXIT_OK
    for v in report.violations:
        print(f"violation [{v.kind}] {v.detail}")
    return EXIT_INVALID


def cmd_export_lp(cfg: RunConfig) -> int:
    g = _load_graph(cfg.graph)
    source = _coarse_source(cfg.coarse)
    coarse = resolve_coarse(g, cfg.stages, source)
    if not validate_schedule(g, coarse).ok:
        coarse = repair_schedule(g, coarse)
    gamma = cfg.gamma if cfg.gamma is not None else 0
    window = relax_window(g, coarse, gamma)
    domains = build_domains(g, coarse, window, cfg.stages)
    model = build_model(g, cfg.stages, domains, cfg.cache_bytes)
    text = lp_export(model)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _RunLog:
    """INFO-level log capture into the run directory for post-mortems."""

    def __init__(self, out_dir: Path):
        self.handler = logging.FileHandler(out_dir / "logs.txt", encoding="utf-8")
        self.handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
        self.root = logging.getLogger("pipesched")

    def __enter__(self):
        self.root.addHandler(self.handler)
        self.root.setLevel(logging.INFO)
        return self

    def __exit__(self, *exc):
        self.root.removeHandler(self.handler)
        self.handler.close()
        return False


def _gamma_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    a, b = int(lo), int(hi)
    if a > b:
        raise argparse.ArgumentTypeError(f"gamma range bounds out of order: {text}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pipesched", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("--graph", required=True)
        sp.add_argument("--stages", type=int, required=True)
        sp.add_argument("--coarse", default="balanced")
        sp.add_argument("--cache-bytes", type=int, default=DEFAULT_CACHE_BYTES)
        sp.add_argument("--time-limit-s", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("schedule", help="schedule one graph")
    common(sp)
    sp.add_argument("--gamma", type=int, default=None)
    sp.add_argument("--mode", choices=["inc", "exact", "coarse"], default="inc")
    sp.add_argument("--dump-domains", action="store_true")
    sp.add_argument("--objective-order", default="peak,offcache,comm",
                    help="lexicographic tier order, a permutation of peak,offcache,comm")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("sweep", help="gamma convergence sweep on one graph")
    common(sp)
    sp.add_argument("--gamma-range", type=_gamma_range, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("compare", help="method comparison over a corpus")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--gamma", type=int, default=0)
    sp.add_argument("--coarse", default="balanced")
    sp.add_argument("--cache-bytes", type=int, default=DEFAULT_CACHE_BYTES)
    sp.add_argument("--time-limit-s", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("generate", help="generate a graph corpus")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--nodes", type=int, default=30)
    sp.add_argument("--deg", default="2")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("export-labels", help="graph + exact-optimum schedule pairs")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--nodes", type=int, default=30)
    sp.add_argument("--deg", type=int, default=2)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--cache-bytes", type=int, default=DEFAULT_CACHE_BYTES)
    sp.add_argument("--time-limit-s", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("validate", help="validate a schedule file against a graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--schedule", required=True)

    sp = sub.add_parser("export-lp", help="write the ILP in LP text format")
    common(sp)
    sp.add_argument("--gamma", type=int, default=None)
    sp.add_argument("--out", default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    if args.command == "schedule":
        if args.stages < 1:
            print("error: --stages must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        cfg = RunConfig(
            command="schedule", graph=args.graph, stages=args.stages, gamma=args.gamma,
            coarse=args.coarse, cache_bytes=args.cache_bytes, time_limit_s=args.time_limit_s,
            seed=args.seed, out=args.out, mode=args.mode, dump_domains=args.dump_domains,
            objective_order=tuple(args.objective_order.split(",")),
        )
        return cmd_schedule(cfg)
    if args.command == "sweep":
        cfg = RunConfig(
            command="sweep", graph=args.graph, stages=args.stages, gamma_range=args.gamma_range,
            coarse=args.coarse, cache_bytes=args.cache_bytes, time_limit_s=args.time_limit_s,
            seed=args.seed, out=args.out,
        )
        return cmd_sweep(cfg)
    if args.command == "compare":
        cfg = RunConfig(
            command="compare", corpus=args.corpus, stages=args.stages, gamma=args.gamma,
            coarse=args.coarse, cache_bytes=args.cache_bytes, time_limit_s=args.time_limit_s,
            seed=args.seed, jobs=args.jobs, out=args.out,
        )
        return cmd_compare(cfg)
    if args.command == "generate":
        if args.count < 1:
            print("error: --count must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        degs = [int(d) for d in str(args.deg).split(",")]
        cfg = RunConfig(command="generate", seed=args.seed, out=args.out)
        return cmd_generate(cfg, args.nodes, degs, args.count)
    if args.command == "export-labels":
        cfg = RunConfig(
            command="export-labels", stages=args.stages, cache_bytes=args.cache_bytes,
            time_limit_s=args.time_limit_s, seed=args.seed, out=args.out,
        )
        return cmd_export_labels(cfg, args.nodes, args.deg, args.count)
    if args.command == "validate":
        return cmd_validate(args.graph, args.schedule)
    if args.command == "export-lp":
        cfg = RunConfig(
            command="export-lp", graph=args.graph, stages=args.stages, gamma=args.gamma,
            coarse=args.coarse, cache_bytes=args.cache_bytes, out=args.out,
        )
        return cmd_export_lp(cfg)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

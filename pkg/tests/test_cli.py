import csv
import json
from pathlib import Path

import pytest

from pipesched import generate_dag, load_coarse_schedule, parse_graph, serialize_graph, solve_exact
from pipesched.cli import main
from pipesched.gen import GenSpec


@pytest.fixture
def graph_file(tmp_path):
    g = generate_dag(GenSpec(num_nodes=18, max_in_degree=2, seed=3))
    p = tmp_path / "g.json"
    p.write_text(serialize_graph(g), encoding="utf-8")
    return p


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestGenerate:
    def test_corpus_and_determinism(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["generate", "--count", "3", "--nodes", "16", "--deg", "2,3",
                         "--seed", "11", "--out", str(out)]) == 0
        files_a = sorted(p.relative_to(a) for p in a.rglob("*.json"))
        files_b = sorted(p.relative_to(b) for p in b.rglob("*.json"))
        assert files_a == files_b and len(files_a) == 8  # 2x(3 graphs + manifest)
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes()

    def test_zero_count_usage_error(self, tmp_path):
        assert main(["generate", "--count", "0", "--out", str(tmp_path / "x")]) == 2


class TestSchedule:
    def test_inc_end_to_end(self, graph_file, tmp_path):
        out = tmp_path / "run"
        code = main(["schedule", "--graph", str(graph_file), "--stages", "3", "--gamma", "4",
                     "--coarse", "balanced", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["proved_optimal"] is True
        assert report["gamma"] == 4
        assert len(report["objective_vector"]) == 3
        g = parse_graph(graph_file.read_text())
        s = load_coarse_schedule(out / "schedule.json", g, 3)
        assert len(s.assignment) == g.num_nodes
        assert json.loads((out / "config.json").read_text())["format_version"] == 1

    def test_exact_mode_gamma_null(self, graph_file, tmp_path):
        out = tmp_path / "run"
        assert main(["schedule", "--graph", str(graph_file), "--stages", "3",
                     "--mode", "exact", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["gamma"] is None
        sched = json.loads((out / "schedule.json").read_text())
        assert sched["meta"]["producer"] == "exact"

    def test_coarse_mode_exits_incumbent(self, graph_file, tmp_path):
        out = tmp_path / "run"
        assert main(["schedule", "--graph", str(graph_file), "--stages", "3",
                     "--mode", "coarse", "--out", str(out)]) == 3

    def test_zero_stages_usage_error(self, graph_file, tmp_path):
        assert main(["schedule", "--graph", str(graph_file), "--stages", "0",
                     "--out", str(tmp_path / "x")]) == 2

    def test_dump_domains(self, graph_file, tmp_path):
        out = tmp_path / "run"
        assert main(["schedule", "--graph", str(graph_file), "--stages", "3", "--gamma", "1",
                     "--dump-domains", "--out", str(out)]) == 0
        assert (out / "domains.json").exists()
        assert (out / "window.json").exists()

    def test_file_coarse_source(self, graph_file, tmp_path):
        pre = tmp_path / "pre"
        assert main(["schedule", "--graph", str(graph_file), "--stages", "3",
                     "--mode", "coarse", "--out", str(pre)]) == 3
        out = tmp_path / "run"
        code = main(["schedule", "--graph", str(graph_file), "--stages", "3", "--gamma", "2",
                     "--coarse", f"file:{pre / 'schedule.json'}", "--out", str(out)])
        assert code == 0
        sched = json.loads((out / "schedule.json").read_text())
        assert sched["meta"]["producer"].startswith("external_file:")


class TestSweep:
    def test_timeout_marks_gap_unavailable(self, tmp_path):
        g = generate_dag(GenSpec(num_nodes=70, max_in_degree=2, seed=13))
        p = tmp_path / "g.json"
        p.write_text(serialize_graph(g), encoding="utf-8")
        out = tmp_path / "sweep"
        assert main(["sweep", "--graph", str(p), "--stages", "4", "--gamma-range", "0:1",
                     "--time-limit-s", "0.002", "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        assert all(r["gap_pct"] == "" for r in rows)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["gamma_star"] is None and summary["exact_proved"] is False

    def test_gap_monotone_and_terminates_at_zero(self, tmp_path):
        g = generate_dag(GenSpec(num_nodes=16, max_in_degree=2, seed=9))
        p = tmp_path / "g.json"
        p.write_text(serialize_graph(g), encoding="utf-8")
        out = tmp_path / "sweep"
        assert main(["sweep", "--graph", str(p), "--stages", "3",
                     "--gamma-range", f"0:{g.depth}", "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        gaps = [float(r["gap_pct"]) for r in rows]
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] == 0.0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["gamma_star"] is not None
        assert float(rows[summary["gamma_star"]]["gap_pct"]) == 0.0

    def test_single_point_range_at_depth(self, tmp_path):
        g = generate_dag(GenSpec(num_nodes=12, max_in_degree=2, seed=2))
        p = tmp_path / "g.json"
        p.write_text(serialize_graph(g), encoding="utf-8")
        out = tmp_path / "sweep"
        d = g.depth
        assert main(["sweep", "--graph", str(p), "--stages", "2",
                     "--gamma-range", f"{d}:{d}", "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        assert len(rows) == 1
        assert float(rows[0]["gap_pct"]) == 0.0


class TestCompare:
    def make_corpus(self, tmp_path, count=3):
        out = tmp_path / "corpus"
        assert main(["generate", "--count", str(count), "--nodes", "14", "--deg", "2",
                     "--seed", "5", "--out", str(out)]) == 0
        return out

    def test_table_structure(self, tmp_path):
        corpus = self.make_corpus(tmp_path)
        out = tmp_path / "cmp"
        assert main(["compare", "--corpus", str(corpus), "--stages", "3", "--gamma", "1",
                     "--out", str(out)]) == 0
        rows = read_csv(out / "results.csv")
        assert len(rows) == 9  # 3 instances x 3 methods
        assert {r["method"] for r in rows} == {"exact", "coarse", "inc"}
        for r in rows:
            if r["method"] == "exact":
                assert r["proved_optimal"] == "True"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["optimal_pct"]["exact"] == 100.0
        assert (out / "schedules").is_dir()

    def test_coarse_optimal_only_when_matching_exact(self, tmp_path):
        corpus = self.make_corpus(tmp_path)
        out = tmp_path / "cmp"
        main(["compare", "--corpus", str(corpus), "--stages", "3", "--gamma", "0",
              "--out", str(out)])
        rows = read_csv(out / "results.csv")
        by_inst = {}
        for r in rows:
            by_inst.setdefault(r["instance"], {})[r["method"]] = r
        for inst, methods in by_inst.items():
            exact_vec = tuple(methods["exact"][c] for c in ("m_peak", "total_offcache", "com_max"))
            coarse_vec = tuple(methods["coarse"][c] for c in ("m_peak", "total_offcache", "com_max"))
            assert (methods["coarse"]["proved_optimal"] == "True") == (exact_vec == coarse_vec)

    def test_empty_corpus_usage_error(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "manifest.json").write_text('{"format_version":1,"entries":[]}')
        assert main(["compare", "--corpus", str(corpus), "--stages", "2",
                     "--out", str(tmp_path / "cmp")]) == 2

    def test_jobs_parallel_same_results(self, tmp_path):
        corpus = self.make_corpus(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        main(["compare", "--corpus", str(corpus), "--stages", "3", "--gamma", "1", "--out", str(a)])
        main(["compare", "--corpus", str(corpus), "--stages", "3", "--gamma", "1",
              "--jobs", "2", "--out", str(b)])
        ra, rb = read_csv(a / "results.csv"), read_csv(b / "results.csv")
        strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rows]
        assert strip(ra) == strip(rb)


class TestExportLabels:
    def test_pairs_verified_against_exact(self, tmp_path):
        out = tmp_path / "labels"
        assert main(["export-labels", "--count", "3", "--nodes", "12", "--deg", "2",
                     "--stages", "3", "--seed", "21", "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["entries"]) == 3
        for e in manifest["entries"]:
            g = parse_graph((out / e["graph"]).read_text())
            s = load_coarse_schedule(out / e["label"], g, manifest["num_stages"])
            report = solve_exact(g, manifest["num_stages"])
            assert report.objective_vector == tuple(e["objective_vector"])
            assert s.assignment == report.schedule.assignment

    def test_zero_count(self, tmp_path):
        out = tmp_path / "labels"
        assert main(["export-labels", "--count", "0", "--stages", "2", "--out", str(out)]) == 0
        assert json.loads((out / "manifest.json").read_text())["entries"] == []


class TestValidate:
    def test_ok_and_violations(self, graph_file, tmp_path):
        run = tmp_path / "run"
        main(["schedule", "--graph", str(graph_file), "--stages", "3", "--out", str(run)])
        assert main(["validate", "--graph", str(graph_file),
                     "--schedule", str(run / "schedule.json")]) == 0
        # break the schedule file: swap two stages across a dependence
        doc = json.loads((run / "schedule.json").read_text())
        doc["assignment"]["0"] = 2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", "--graph", str(graph_file), "--schedule", str(bad)]) == 4


class TestExportLp:
    def test_writes_lp(self, graph_file, tmp_path):
        out = tmp_path / "model.lp"
        assert main(["export-lp", "--graph", str(graph_file), "--stages", "3",
                     "--gamma", "1", "--out", str(out)]) == 0
        text = out.read_text()
        assert "Minimize" in text and "End" in text

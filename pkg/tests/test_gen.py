import json
from pathlib import Path

import pytest

from pipesched import GraphError, generate_corpus, generate_dag, parse_graph
from pipesched.gen import GenSpec


def in_degrees(g):
    d = [0] * g.num_nodes
    for _, j in g.edges:
        d[j] += 1
    return d


class TestGenerateDag:
    def test_thirty_node_deg2_structure(self):
        g = generate_dag(GenSpec(num_nodes=30, max_in_degree=2, seed=7))
        assert g.num_nodes == 30
        assert max(in_degrees(g)) <= 2
        assert len(g.topo_order) == 30  # construction would raise on a cycle

    def test_single_global_source_and_sink(self):
        for seed in range(30):
            g = generate_dag(GenSpec(num_nodes=25, max_in_degree=4, seed=seed))
            indeg = in_degrees(g)
            assert sum(1 for d in indeg if d == 0) == 1
            assert sum(1 for v in range(g.num_nodes) if not g.succs(v)) == 1
            assert g.nodes[0].name == "start" and g.nodes[0].param_bytes == 0
            assert g.nodes[-1].name == "end" and g.nodes[-1].param_bytes == 0

    def test_degenerate_single_node(self):
        g = generate_dag(GenSpec(num_nodes=1, max_in_degree=2, seed=3, virtual_endpoints=False))
        assert g.num_nodes == 1
        assert g.edges == ()

    def test_impossible_spec(self):
        with pytest.raises(GraphError, match="virtual endpoints"):
            generate_dag(GenSpec(num_nodes=1, max_in_degree=2, seed=0))
        with pytest.raises(GraphError):
            GenSpec(num_nodes=0, max_in_degree=2, seed=0)
        with pytest.raises(GraphError):
            GenSpec(num_nodes=5, max_in_degree=2, seed=0, param_bytes_range=(10, 5))

    def test_two_nodes_just_endpoints(self):
        g = generate_dag(GenSpec(num_nodes=2, max_in_degree=3, seed=0))
        assert g.edges == ((0, 1),)

    def test_seeded_sweep_properties(self):
        # scaled-down version of the acceptance sweep
        for deg in (2, 3, 4, 5, 6):
            for seed in range(40):
                spec = GenSpec(num_nodes=30, max_in_degree=deg, seed=seed)
                g = generate_dag(spec)
                assert g.num_nodes == 30
                assert max(in_degrees(g)) <= deg
                assert min(in_degrees(g)[1:]) >= 1

    def test_determinism(self):
        spec = GenSpec(num_nodes=40, max_in_degree=3, seed=99)
        a = generate_dag(spec)
        b = generate_dag(spec)
        assert a.nodes == b.nodes and a.edges == b.edges
        c = generate_dag(GenSpec(num_nodes=40, max_in_degree=3, seed=98))
        assert (a.nodes, a.edges) != (c.nodes, c.edges)

    def test_attribute_ranges(self):
        spec = GenSpec(num_nodes=30, max_in_degree=2, seed=5,
                       param_bytes_range=(100, 200), out_bytes_range=(7, 9))
        g = generate_dag(spec)
        for v in g.nodes[1:-1]:
            assert 100 <= v.param_bytes <= 200
            assert 7 <= v.out_bytes <= 9

    def test_chain_dominated_depth_tracks_resnet_shape(self):
        # max_in_degree=1 forces the single-source/single-sink chain, whose
        # depth |V|-1 falls in the deep band typical of 177-node CNN graphs
        g = generate_dag(GenSpec(num_nodes=177, max_in_degree=1, seed=4))
        assert 177 - 20 <= g.depth <= 177 - 1

    def test_deg2_graphs_stay_deep(self):
        for seed in range(10):
            g = generate_dag(GenSpec(num_nodes=60, max_in_degree=2, seed=seed))
            assert g.depth >= 30


class TestGenerateCorpus:
    def test_small_corpus_with_manifest(self, tmp_path):
        template = GenSpec(num_nodes=20, max_in_degree=2, seed=0)
        for i, deg in enumerate((2, 3)):
            sub = tmp_path / f"deg{deg}"
            entries = generate_corpus(
                GenSpec(num_nodes=20, max_in_degree=deg, seed=0), 5, seed=100 + i, out_dir=sub
            )
            assert len(entries) == 5
            manifest = json.loads((sub / "manifest.json").read_text())
            assert len(manifest["entries"]) == 5
            for e in manifest["entries"]:
                g = parse_graph((sub / e["path"]).read_text())
                assert g.depth == e["depth"]
                assert g.num_nodes == e["num_nodes"]

    def test_same_seed_byte_identical(self, tmp_path):
        template = GenSpec(num_nodes=15, max_in_degree=3, seed=0)
        generate_corpus(template, 4, seed=7, out_dir=tmp_path / "a")
        generate_corpus(template, 4, seed=7, out_dir=tmp_path / "b")
        for name in sorted(p.name for p in (tmp_path / "a").iterdir()):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_zero_count(self, tmp_path):
        entries = generate_corpus(GenSpec(num_nodes=5, max_in_degree=2, seed=0), 0, 1, tmp_path)
        assert entries == []
        assert json.loads((tmp_path / "manifest.json").read_text())["entries"] == []

import itertools

import pytest

from pipesched import (
    Schedule,
    and_constraints,
    balanced_topo_partition,
    build_domains,
    build_model,
    full_domains,
    generate_dag,
    lp_export,
    relax_window,
    schedule_metrics,
    validate_schedule,
)
from pipesched.gen import GenSpec
from pipesched.ilp import LinExpr, ModelError, Var, crossing_constraints

from conftest import chain_graph


class TestAndLinearization:
    def test_truth_table_rows(self):
        x, y, z = Var("x", "binary"), Var("y", "binary"), Var("z", "binary")
        cons = and_constraints(x, y, z)
        assert len(cons) == 3
        for xv, yv in itertools.product((0, 1), repeat=2):
            feasible = [
                zv for zv in (0, 1)
                if all(c.satisfied({"x": xv, "y": yv, "z": zv}) for c in cons)
            ]
            assert feasible == [xv & yv]

    def test_one_one_forces_one(self):
        x, y, z = Var("x", "binary"), Var("y", "binary"), Var("z", "binary")
        cons = and_constraints(x, y, z)
        assert all(c.satisfied({"x": 1, "y": 1, "z": 1}) for c in cons)
        assert not all(c.satisfied({"x": 1, "y": 1, "z": 0}) for c in cons)

    def test_one_zero_forces_zero(self):
        x, y, z = Var("x", "binary"), Var("y", "binary"), Var("z", "binary")
        cons = and_constraints(x, y, z)
        assert all(c.satisfied({"x": 1, "y": 0, "z": 0}) for c in cons)
        assert not all(c.satisfied({"x": 1, "y": 0, "z": 1}) for c in cons)


class TestCrossingLinearization:
    @pytest.mark.parametrize("K", [1, 2, 3, 4, 5, 6])
    def test_b_matches_strict_order(self, K):
        si, sj, b = Var("si", "integer"), Var("sj", "integer"), Var("b", "binary")
        cons = crossing_constraints(LinExpr({"si": 1}), LinExpr({"sj": 1}), b, K)
        assert len(cons) == 2
        for a, c in itertools.product(range(K), repeat=2):
            feasible = [
                bv for bv in (0, 1)
                if all(con.satisfied({"si": a, "sj": c, "b": bv}) for con in cons)
            ]
            assert feasible == [1 if a < c else 0], (a, c, K)

    def test_specific_rows(self):
        b = Var("b", "binary")
        cons = crossing_constraints(LinExpr({"si": 1}), LinExpr({"sj": 1}), b, 3)
        ok = lambda si, sj, bv: all(c.satisfied({"si": si, "sj": sj, "b": bv}) for c in cons)
        assert ok(0, 2, 1) and not ok(0, 2, 0)
        assert ok(1, 1, 0) and not ok(1, 1, 1)


class TestBuildModel:
    def test_two_node_chain_census(self):
        g = chain_graph([4, 4], outs=[2, 2])
        model = build_model(g, 2, full_domains(g, 2), cache_capacity=8)
        assert len(model.x_vars) == 4
        assert sum(1 for b in model.b_vals if isinstance(b, Var)) == 1
        counts = model.family_counts()
        assert counts == {
            "exactly_one": 2,
            "dependence": 1,
            "crossing": 2,
            "and": 3,
            "mem_def": 2,
            "peak": 2,
            "comm_def": 1,
            "nonempty": 2,
            "offcache": 2,
            "comm_max": 1,
        }

    def test_frozen_node_shrinks_model(self, relax_fixture):
        g, s = relax_fixture
        w = relax_window(g, s, 1)
        domains = build_domains(g, s, w, 2)
        model = build_model(g, 2, domains, cache_capacity=100)
        full = build_model(g, 2, full_domains(g, 2), cache_capacity=100)
        assert set(model.frozen) == set(w.frozen_nodes)
        assert len(model.x_vars) < len(full.x_vars)
        assert len(model.constraints) < len(full.constraints)

    def test_single_stage_collapses(self):
        g = chain_graph([3, 4])
        model = build_model(g, 1, full_domains(g, 1), cache_capacity=5)
        assert model.c_vars == [] and model.com_max_var is None
        assert not any(isinstance(b, Var) for b in model.b_vals)
        triple, _ = model.evaluate_assignment({0: 0, 1: 0})
        assert triple == (7, 2, 0)

    def test_errors(self):
        g = chain_graph([1, 1])
        with pytest.raises(ModelError, match="num_stages"):
            build_model(g, 0, full_domains(g, 1))
        from pipesched import StageDomains

        with pytest.raises(ModelError, match="empty domain"):
            build_model(g, 2, StageDomains({0: (0,), 1: ()}))
        with pytest.raises(ModelError, match="outside"):
            build_model(g, 2, StageDomains({0: (0,), 1: (5,)}))
        with pytest.raises(ModelError, match="objective_order"):
            build_model(g, 2, full_domains(g, 2), objective_order=("peak", "peak", "comm"))

    def test_objective_order_switch(self):
        g = chain_graph([1, 1])
        model = build_model(g, 2, full_domains(g, 2), objective_order=("peak", "comm", "offcache"))
        assert [tag for tag, _ in model.objectives] == ["peak", "comm", "offcache"]


def enumerate_assignments(g, domains):
    nodes = list(range(g.num_nodes))
    for combo in itertools.product(*(domains.domain[v] for v in nodes)):
        yield dict(zip(nodes, combo))


class TestModelSemantics:
    def test_model_metric_agreement_on_feasible_points(self):
        for seed in range(8):
            g = generate_dag(GenSpec(num_nodes=6, max_in_degree=2, seed=seed,
                                     param_bytes_range=(1, 20), out_bytes_range=(1, 20)))
            cache = 15
            model = build_model(g, 2, full_domains(g, 2), cache_capacity=cache)
            checked = 0
            for a in enumerate_assignments(g, model.domains):
                if not model.is_feasible(a):
                    continue
                triple, values = model.evaluate_assignment(a)
                s = Schedule(2, a)
                m = schedule_metrics(g, s, cache)
                assert triple == m.objective_vector
                assert all(c.satisfied(values) for c in model.constraints)
                checked += 1
            assert checked >= 1

    def test_feasible_iff_valid_within_domains(self):
        g = generate_dag(GenSpec(num_nodes=7, max_in_degree=2, seed=3))
        model = build_model(g, 3, full_domains(g, 3))
        for a in enumerate_assignments(g, model.domains):
            valid = validate_schedule(g, Schedule(3, a)).ok
            assert model.is_feasible(a) == valid

    def test_domain_restriction_is_submodel(self, relax_fixture):
        g, s = relax_fixture
        w = relax_window(g, s, 0)
        restricted = build_model(g, 2, build_domains(g, s, w, 2))
        full = build_model(g, 2, full_domains(g, 2))
        feas_restricted = {
            tuple(a[v] for v in range(g.num_nodes))
            for a in enumerate_assignments(g, restricted.domains)
            if restricted.is_feasible(a)
        }
        feas_full = {
            tuple(a[v] for v in range(g.num_nodes))
            for a in enumerate_assignments(g, full.domains)
            if full.is_feasible(a)
        }
        assert feas_restricted <= feas_full

    def test_constant_violation_detection(self):
        g = chain_graph([1, 1])
        from pipesched import StageDomains

        bad = build_model(g, 2, StageDomains({0: (1,), 1: (0,)}))
        families = {c.family for c in bad.constant_violations()}
        assert "dependence" in families


class TestLpExport:
    def test_sections_and_determinism(self):
        g = chain_graph([4, 4], outs=[2, 2])
        model = build_model(g, 2, full_domains(g, 2), cache_capacity=8)
        text = lp_export(model)
        assert text == lp_export(model)
        for token in ("Minimize", "Subject To", "Bounds", "Generals", "Binaries", "End",
                      "lex-priority 2", "lex-priority 3", "m_peak", "dep_0"):
            assert token in text

    def test_frozen_model_export_smaller(self, relax_fixture):
        g, s = relax_fixture
        w = relax_window(g, s, 0)
        restricted = lp_export(build_model(g, 2, build_domains(g, s, w, 2)))
        full = lp_export(build_model(g, 2, full_domains(g, 2)))
        assert len(restricted) < len(full)

"""LP construction, the simplex solver and mechanism design."""

import numpy as np
import pytest

from _lp_reference import enumerate_optimum, random_lp
from conftest import ALPHA_GRID5
from dpmech import (
    Objective,
    build_lp,
    check_property,
    design_mechanism,
    em_l0_cost,
    explicit_fair,
    geometric,
    gm_l0_cost,
    is_dp,
    l0_objective,
    l0_score,
    max_violation,
    solve_lp,
    uniform_weights,
)
from dpmech.errors import UnsupportedObjective
from dpmech.lp import (
    REL_EQ,
    REL_GE,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LinearProgram,
)


def _mk(c, rows, rels, rhs, lo=None, hi=None):
    c = np.asarray(c, dtype=float)
    nv = c.size
    return LinearProgram(
        c=c,
        a=np.asarray(rows, dtype=float).reshape(-1, nv),
        rel=np.asarray(rels, dtype=np.int8),
        b=np.asarray(rhs, dtype=float),
        lo=np.zeros(nv) if lo is None else np.asarray(lo, dtype=float),
        hi=np.full(nv, np.inf) if hi is None else np.asarray(hi, dtype=float),
    )


class TestBuildLp:
    def test_basic_shape_n1(self):
        lp = build_lp(1, 0.5, frozenset(), Objective(p=1, weights=uniform_weights(1)))
        assert lp.num_vars == 4
        assert int((lp.rel == REL_EQ).sum()) == 2
        assert int((lp.rel == REL_GE).sum()) == 4
        assert np.all(lp.lo == 0.0) and np.all(lp.hi == 1.0)

    def test_weak_honesty_rows(self):
        base = build_lp(2, 0.5, frozenset(), l0_objective(2))
        with_wh = build_lp(2, 0.5, {"WH"}, l0_objective(2))
        extra = with_wh.num_constraints - base.num_constraints
        assert extra == 3
        assert np.allclose(with_wh.b[-3:], 1 / 3)
        assert np.all(with_wh.rel[-3:] == REL_GE)

    def test_symmetry_rows(self):
        base = build_lp(2, 0.5, frozenset(), l0_objective(2))
        with_s = build_lp(2, 0.5, {"S"}, l0_objective(2))
        assert with_s.num_constraints - base.num_constraints == 4
        assert np.all(with_s.rel[-4:] == REL_EQ)

    def test_fairness_rows(self):
        base = build_lp(2, 0.5, frozenset(), l0_objective(2))
        with_f = build_lp(2, 0.5, {"F"}, l0_objective(2))
        assert with_f.num_constraints - base.num_constraints == 2

    def test_max_aggregator_rejected(self):
        obj = Objective(p=1, weights=uniform_weights(2), aggregator="max")
        with pytest.raises(UnsupportedObjective):
            build_lp(2, 0.5, frozenset(), obj)

    def test_dump_format(self, tmp_path):
        lp = build_lp(1, 0.5, {"WH"}, l0_objective(1))
        path = tmp_path / "lp.txt"
        with open(path, "w") as fh:
            lp.dump(fh)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("minimize ")
        assert sum(1 for ln in lines if ln.startswith("bound ")) == 4
        assert sum(1 for ln in lines if " >= " in ln and not ln.startswith("bound")) == 6
        assert sum(1 for ln in lines if " == " in ln) == 2


class TestSolveLp:
    def test_maximize_single_variable(self):
        sol = solve_lp(_mk([-1.0], [[1.0]], [REL_GE], [0.0], hi=[1.0]))
        assert sol.status == STATUS_OPTIMAL
        assert sol.values[0] == pytest.approx(1.0, abs=1e-12)
        assert sol.objective_value == pytest.approx(-1.0, abs=1e-12)

    def test_covering_pair(self):
        sol = solve_lp(_mk([1.0, 1.0], [[1.0, 1.0]], [REL_GE], [2.0]))
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective_value == pytest.approx(2.0, abs=1e-12)

    def test_infeasible(self):
        lp = _mk([1.0], [[1.0], [1.0]], [REL_GE, -1], [2.0, 1.0])
        assert solve_lp(lp).status == STATUS_INFEASIBLE

    def test_unbounded(self):
        sol = solve_lp(_mk([-1.0], np.zeros((0, 1)), [], []))
        assert sol.status == STATUS_UNBOUNDED

    def test_basicdp_n2_recovers_geometric(self):
        lp = build_lp(2, 0.5, frozenset(), l0_objective(2))
        sol = solve_lp(lp)
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective_value == pytest.approx(2 / 3, abs=1e-9)
        assert np.allclose(sol.values.reshape(3, 3), geometric(2, 0.5).matrix,
                           atol=1e-7)

    def test_solutions_satisfy_all_rows(self, rng):
        for _ in range(10):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            assert sol.status == STATUS_OPTIMAL
            assert max_violation(lp, sol.values) <= 1e-9

    def test_against_vertex_enumeration(self, rng):
        for _ in range(12):
            lp = random_lp(rng)
            sol = solve_lp(lp)
            assert sol.status == STATUS_OPTIMAL
            assert sol.objective_value == pytest.approx(
                enumerate_optimum(lp), abs=1e-8)

    def test_backends_agree(self, monkeypatch):
        lp = build_lp(3, 0.62, {"WH", "RM"}, l0_objective(3))
        monkeypatch.setenv("DPMECH_BACKEND", "numpy")
        a = solve_lp(lp)
        monkeypatch.setenv("DPMECH_BACKEND", "numba")
        b = solve_lp(lp)
        assert a.status == b.status == STATUS_OPTIMAL
        assert np.allclose(a.values, b.values, atol=1e-12)


class TestDesignMechanism:
    def test_n1_gives_randomized_response(self):
        for a in (0.3, 0.62, 0.9):
            for props in (frozenset(), {"F"}, {"WH", "S"}):
                m = design_mechanism(1, a, props, l0_objective(1))
                assert np.allclose(m.matrix, geometric(1, a).matrix, atol=1e-9)

    def test_fully_constrained_matches_fair_cost(self):
        unconstrained = design_mechanism(7, 0.62, frozenset(), l0_objective(7))
        lp_all = design_mechanism(7, 0.62,
                                  {"RH", "RM", "CH", "CM", "F", "WH", "S"},
                                  l0_objective(7))
        assert l0_score(lp_all) == pytest.approx(em_l0_cost(7, 0.62), abs=1e-8)
        assert l0_score(unconstrained) == pytest.approx(gm_l0_cost(0.62), abs=1e-8)

    def test_wh_collapses_to_gm_above_threshold(self):
        # n=10 over the threshold 2a/(1-a) = 6.33 at a=0.76
        m = design_mechanism(10, 0.76, {"WH"}, l0_objective(10))
        assert l0_score(m) == pytest.approx(gm_l0_cost(0.76), abs=1e-8)
        assert l0_score(m) == pytest.approx(0.8636363636363636, abs=1e-8)

    def test_result_carries_requested_properties(self):
        for props in ({"WH"}, {"CM", "S"}, {"F", "RM"}):
            m = design_mechanism(4, 0.7, props, l0_objective(4))
            assert is_dp(m, 0.7)
            for p in props:
                assert check_property(m, p), p

    def test_optimum_monotone_in_constraints(self, rng):
        subsets = [frozenset(), {"WH"}, {"WH", "RM"}, {"WH", "RM", "CM"},
                   {"S"}, {"CH"}, {"F"}, {"F", "S", "RM"}]
        for _ in range(6):
            small = frozenset(rng.choice(sorted(p for s in subsets for p in s), 1))
            a_props = set(subsets[rng.integers(0, len(subsets))])
            b_props = a_props | set(small)
            n = int(rng.integers(2, 5))
            alpha = float(rng.uniform(0.4, 0.9))
            cost_a = l0_score(design_mechanism(n, alpha, a_props, l0_objective(n)))
            cost_b = l0_score(design_mechanism(n, alpha, b_props, l0_objective(n)))
            assert cost_a <= cost_b + 1e-8

    def test_sandwich_between_gm_and_em(self):
        for n in (2, 4, 6):
            for a in (0.62, 0.9):
                wh = l0_score(design_mechanism(n, a, {"WH"}, l0_objective(n)))
                wm = l0_score(design_mechanism(n, a, {"WH", "RM", "CM"},
                                               l0_objective(n)))
                assert gm_l0_cost(a) - 1e-8 <= wh <= wm <= em_l0_cost(n, a) + 1e-8

    def test_symmetry_is_cost_free(self):
        for props in (frozenset(), {"WH"}, {"F"}, {"WH", "CM"}):
            base = l0_score(design_mechanism(4, 0.8, props, l0_objective(4)))
            sym = l0_score(design_mechanism(4, 0.8, props | {"S"}, l0_objective(4)))
            assert sym == pytest.approx(base, abs=1e-8)

    def test_unconstrained_matches_gm_entrywise(self):
        for n in (2, 5):
            for a in (0.3, 0.62, 0.9):
                m = design_mechanism(n, a, frozenset(), l0_objective(n))
                assert np.abs(m.matrix - geometric(n, a).matrix).max() <= 1e-7

    def test_fair_optimum_weight_independent(self, rng):
        n = 4
        costs = []
        for _ in range(3):
            w = rng.uniform(0.05, 1.0, n + 1)
            w /= w.sum()
            obj = Objective(p=0, weights=w, rescale=True)
            m = design_mechanism(n, 0.7, {"F"}, obj)
            # rescaled p=0 objective of a fair mechanism is weight independent
            costs.append(l0_score(m))
        assert np.ptp(costs) <= 1e-8
        assert costs[0] == pytest.approx(em_l0_cost(4, 0.7), abs=1e-8)

    def test_degenerate_l2_request_is_returned_as_solved(self):
        # the unconstrained squared-error optimum may concentrate columns on a
        # single output; the library reports it rather than repairing it
        obj = Objective(p=2, weights=uniform_weights(4))
        m = design_mechanism(4, 0.62, frozenset(), obj)
        assert is_dp(m, 0.62)
        lp = build_lp(4, 0.62, frozenset(), obj)
        sol = solve_lp(lp)
        assert sol.objective_value == pytest.approx(
            float(np.sum(m.matrix * obj.weights[None, :]
                         * np.square(np.subtract.outer(np.arange(5), np.arange(5))))),
            abs=1e-9)

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import load_oracle, milp_from_instance
from oracle_tools import enumerate_milp, random_milp
from hiergraph.expr import BINARY, CONTINUOUS, LinExpr, LinearConstraint, VariableDef
from hiergraph.solver import (
    GAP_REACHED, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, MilpModel, SolveOptions, relative_gap, solve_lp,
    solve_milp,
)
from hiergraph.solver.simplex import resolve, simplex


def _model(cols, rows, obj):
    return MilpModel([VariableDef(*c) for c in cols],
                     [LinearConstraint(LinExpr(t), s, r) for t, s, r in rows], LinExpr(obj))


def test_lp_matches_exact_rational_oracle():
    records = load_oracle("lp_oracle.json")
    statuses = set()
    for rec in records:
        sol = solve_lp(milp_from_instance(rec["instance"]), SolveOptions(backend="native"))
        statuses.add(rec["status"])
        assert sol.status == rec["status"]
        if rec["status"] == "optimal":
            exact = Fraction(*rec["objective"])
            assert abs(sol.objective - float(exact)) <= 1e-6 * max(1.0, abs(float(exact)))
            assert sol.stats["max_violation"] <= 1e-7
    assert statuses >= {"optimal", "infeasible"}


def test_lp_status_corner_cases():
    # unbounded ray, infeasible box, free variable, fixed column and equality-only system
    unb = _model([("x", CONTINUOUS, 0, math.inf)], [], {0: -1})
    assert solve_lp(unb).status == UNBOUNDED
    inf = _model([("x", CONTINUOUS, 0, 1)], [({0: 1}, ">=", 2)], {0: 1})
    assert solve_lp(inf).status == INFEASIBLE
    free = _model([("x", CONTINUOUS, -math.inf, math.inf), ("y", CONTINUOUS, 2, 2)],
                  [({0: 1, 1: 1}, "==", 5)], {0: 1})
    sol = solve_lp(free)
    assert sol.status == OPTIMAL and sol.values.tolist() == pytest.approx([3, 2])
    empty = _model([], [], {})
    assert solve_lp(empty).status == OPTIMAL


def test_milp_statuses_and_gap_reporting():
    knap = _model([(f"b{j}", BINARY, 0, 1) for j in range(6)],
                  [({j: w for j, w in enumerate([3, 4, 5, 6, 7, 8])}, "<=", 15)],
                  {j: -v for j, v in enumerate([4, 5, 7, 8, 9, 11])})
    sol = solve_milp(knap, SolveOptions(mip_gap=0.0))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(-20)
    assert sol.gap == pytest.approx(0.0, abs=1e-12)
    assert sol.best_bound <= sol.objective + 1e-9
    loose = solve_milp(knap, SolveOptions(mip_gap=0.5))
    assert loose.status in (OPTIMAL, GAP_REACHED)
    assert loose.gap <= 0.5 and relative_gap(loose.objective, loose.best_bound) == pytest.approx(loose.gap)
    limited = solve_milp(knap, SolveOptions(mip_gap=0.0, node_limit=1))
    assert limited.status in (LIMIT, OPTIMAL)
    infeasible = _model([("b", BINARY, 0, 1)], [({0: 2}, "==", 1)], {0: 1})
    assert solve_milp(infeasible).status == INFEASIBLE
    unbounded = _model([("b", BINARY, 0, 1), ("y", CONTINUOUS, 0, math.inf)], [], {1: -1})
    assert solve_milp(unbounded).status == UNBOUNDED


def test_time_limit_reports_limit():
    rng = np.random.default_rng(5)
    n = 40
    rows = [({j: float(rng.integers(1, 20)) for j in range(n)}, "<=", 200.0) for _ in range(3)]
    m = _model([(f"b{j}", BINARY, 0, 1) for j in range(n)], rows, {j: -float(rng.integers(1, 30)) for j in range(n)})
    sol = solve_milp(m, SolveOptions(mip_gap=0.0, time_limit=0.0, backend="native"))
    assert sol.status in (LIMIT, OPTIMAL)
    if sol.status == LIMIT and sol.values is not None:
        assert sol.gap >= 0


def test_incumbent_seed_is_used():
    m = _model([("a", BINARY, 0, 1), ("b", BINARY, 0, 1)], [({0: 1, 1: 1}, "<=", 1)], {0: -1, 1: -2})
    sol = solve_milp(m, SolveOptions(mip_gap=0.0, backend="native"), incumbent=np.array([1.0, 0.0]))
    assert sol.objective == pytest.approx(-2)
    assert sol.stats["incumbents"][0] == pytest.approx(-1)


def test_warm_resolve_matches_cold_solve():
    rng = np.random.default_rng(11)
    for _ in range(40):
        m, n = 6, 9
        A = rng.integers(-4, 5, size=(m, n)).astype(float)
        x0 = rng.uniform(0, 3, size=n)
        b = A @ x0 + rng.uniform(0, 2, size=m)
        sense = np.full(m, -1)
        c = rng.integers(-5, 6, size=n).astype(float)
        lb, ub = np.zeros(n), np.full(n, 4.0)
        base = simplex(c, A, sense, b, lb, ub)
        assert base.status == OPTIMAL and base.warm is not None
        j = int(rng.integers(0, n))
        lb2, ub2 = lb.copy(), ub.copy()
        ub2[j] = math.floor(base.x[j])
        warm = resolve(base.warm, lb2, ub2)
        cold = simplex(c, A, sense, b, lb2, ub2)
        assert warm.status == cold.status
        if cold.status == OPTIMAL:
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


def test_native_and_highs_agree():
    rng = np.random.default_rng(99)
    for _ in range(25):
        m = milp_from_instance(random_milp(rng, max_cols=15, max_bin=6, max_rows=10))
        a = solve_milp(m, SolveOptions(mip_gap=0.0, backend="native"))
        b = solve_milp(m, SolveOptions(mip_gap=0.0, backend="highs"))
        assert a.status == b.status
        if a.status == OPTIMAL:
            assert a.objective == pytest.approx(b.objective, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_milp_property_against_enumeration(seed):
    inst = random_milp(np.random.default_rng(seed), max_cols=10, max_bin=5, max_rows=8)
    status, obj = enumerate_milp(inst)
    sol = solve_milp(milp_from_instance(inst), SolveOptions(mip_gap=0.0, backend="native"))
    assert sol.status == status
    if status == "optimal":
        assert sol.objective == pytest.approx(obj, abs=1e-6)
        assert sol.stats["max_violation"] <= 1e-6


def test_bad_options_rejected():
    with pytest.raises(ValueError):
        SolveOptions(mip_gap=-1)
    with pytest.raises(ValueError):
        SolveOptions(backend="cplex")
    with pytest.raises(ValueError):
        MilpModel([VariableDef("x")], [LinearConstraint(LinExpr({3: 1.0}), "<=", 0)], LinExpr())

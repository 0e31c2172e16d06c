import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darplpt.milp import (BINARY, CONTINUOUS, GE, INFEASIBLE, INTEGER, LE, OPTIMAL, EQ, BackendError, Cut,
                          MilpModel, SolveResult, solve)


def knapsack(values, weights, cap):
    m = MilpModel("knap")
    xs = [m.add_var(f"x[{k}]", BINARY, obj=-v) for k, v in enumerate(values)]
    m.add_constr(zip(xs, weights), LE, cap, "cap")
    return m


def brute_knapsack(values, weights, cap):
    best = 0.0
    for pick in itertools.product([0, 1], repeat=len(values)):
        if np.dot(pick, weights) <= cap:
            best = max(best, float(np.dot(pick, values)))
    return -best


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=8), st.data())
def test_knapsack_matches_enumeration(values, data):
    weights = data.draw(st.lists(st.integers(1, 10), min_size=len(values), max_size=len(values)))
    cap = data.draw(st.integers(0, 30))
    for backend in ("scip", "highs"):
        res = solve(knapsack(values, weights, cap), backend=backend)
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(brute_knapsack(values, weights, cap), abs=1e-6)


def no_neighbours(n):
    """Lazy rows forbidding two adjacent items on a ring."""
    def source(x):
        out = []
        for k in range(n):
            j = (k + 1) % n
            if x[k] + x[j] > 1.5:
                out.append(Cut((k, j), (1.0, 1.0), LE, 1.0, f"ring[{k}]"))
        return out
    return source


def ring_model(weights):
    m = MilpModel("ring")
    for k, w in enumerate(weights):
        m.add_var(f"x[{k}]", BINARY, obj=-w)
    return m


def brute_ring(weights):
    n = len(weights)
    best = 0.0
    for pick in itertools.product([0, 1], repeat=n):
        if all(pick[k] + pick[(k + 1) % n] <= 1 for k in range(n)):
            best = max(best, float(np.dot(pick, weights)))
    return -best


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=3, max_size=9))
def test_lazy_modes_agree(weights):
    expected = brute_ring(weights)
    for backend, mode in [("scip", "callback"), ("scip", "loop"), ("highs", "loop")]:
        m = ring_model(weights)
        res = solve(m, cut_source=no_neighbours(len(weights)), backend=backend, mode=mode)
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(expected, abs=1e-6)
        assert not no_neighbours(len(weights))(res.values)
        assert m.count_rows("ring") == res.cuts


def test_highs_has_no_callback():
    with pytest.raises(BackendError):
        solve(ring_model([1, 2, 3]), cut_source=no_neighbours(3), backend="highs", mode="callback")


def test_unknown_backend():
    with pytest.raises(BackendError):
        solve(knapsack([1], [1], 1), backend="cplex")


def test_separation_error_surfaces():
    def broken(x):
        raise RuntimeError("boom")
    with pytest.raises(BackendError, match="separation"):
        solve(ring_model([1, 2, 3]), cut_source=broken, backend="scip", mode="callback")


def test_infeasible():
    m = MilpModel()
    x = m.add_var("x", INTEGER, 0, 10)
    m.add_constr([(x, 2.0)], EQ, 3.0)
    for backend in ("scip", "highs"):
        assert solve(m, backend=backend).status == INFEASIBLE


def test_mixed_integer_bound():
    m = MilpModel()
    x = m.add_var("x", INTEGER, 0, 10, obj=1.0)
    y = m.add_var("y", CONTINUOUS, 0, 10, obj=1.0)
    m.add_constr([(x, 1.0), (y, 2.0)], GE, 3.5)
    for backend in ("scip", "highs"):
        res = solve(m, backend=backend)
        assert res.objective == pytest.approx(1.75)
        assert res.bound == pytest.approx(res.objective)
        assert res.gap == 0.0


def test_lp_dump_is_readable(tmp_path):
    pyscipopt = pytest.importorskip("pyscipopt")
    m = knapsack([4, 5, 7], [2, 3, 4], 6)
    m.add_constr([(0, 1.0), (2, 1.0)], GE, 1, "need a[0] or c#2")
    path = tmp_path / "k.lp"
    m.write_lp(path)
    s = pyscipopt.Model()
    s.hideOutput()
    s.readProblem(str(path))
    assert s.getNVars() == 3 and s.getNConss() == 2
    s.optimize()
    assert s.getObjVal() == pytest.approx(solve(m).objective)


def test_gap_definition():
    assert SolveResult("feasible", 100.0, 90.0, None).gap == pytest.approx(0.1)
    assert SolveResult("feasible", 0.0, -1.0, None).gap == 0.0
    assert SolveResult("time-limit", None, 5.0, None).gap is None


def test_violated_rows():
    m = knapsack([1, 1], [1, 1], 1)
    assert [r.name for r in m.violated_rows([1, 1])] == ["cap"]
    assert m.objective_value([1, 0]) == -1

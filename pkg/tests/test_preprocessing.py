import pytest
from hypothesis import given, settings, strategies as st

from darplpt.instance import random_instance
from darplpt.oracle import brute_force_optimal, enumerate_routes
from darplpt.preprocessing import InfeasibleInstance, eliminate_arcs, tighten_time_windows

from conftest import line_instance


def test_depot_reach_rule():
    inst = line_instance([(0, 0), (10, 0), (20, 0)], {1: (0, 1000), 2: (0, 1000)})
    assert tighten_time_windows(inst).e(1) >= 10 - 1e-9


def test_backward_pair_rule():
    # pickup at distance 20 from its delivery, which must start by 100
    inst = line_instance([(0, 0), (0, 0), (20, 0)], {1: (0, 1440), 2: (0, 100)}, service=3, horizon=1440)
    assert tighten_time_windows(inst).l(1) <= 77 + 1e-9


def test_fixpoint():
    inst = random_instance(6, 3)
    once = tighten_time_windows(inst)
    twice = tighten_time_windows(once)
    assert [(l.e, l.l) for l in once.locations] == [(l.e, l.l) for l in twice.locations]


def test_empty_window_raises():
    inst = line_instance([(0, 0), (50, 0), (60, 0)], {1: (0, 10), 2: (0, 1000)})
    with pytest.raises(InfeasibleInstance):
        tighten_time_windows(inst)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(0, 5000))
def test_windows_shrink(n, seed):
    inst = random_instance(n, seed)
    tight = tighten_time_windows(inst)
    for a, b in zip(inst.locations, tight.locations):
        assert a.e - 1e-9 <= b.e <= b.l <= a.l + 1e-9


def test_arc_rules():
    inst = random_instance(4, 5)
    arcs = eliminate_arcs(inst)
    n = inst.n
    assert (n + 1, 1) not in arcs
    assert (0, n + 3) not in arcs
    assert (1, 2 * n + 1) not in arcs
    assert (0, 2 * n + 1) in arcs


def test_time_infeasible_arc_removed():
    inst = line_instance([(0, 0), (0, 0), (100, 0), (1, 0), (101, 0)],
                         {1: (0, 10), 2: (200, 300), 3: (0, 20), 4: (200, 300)})
    assert (2, 1) not in eliminate_arcs(inst)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 5000), st.integers(2, 4))
def test_feasible_routes_survive(n, seed, L):
    """No arc used by a feasible route is eliminated, and tightening keeps every route."""
    inst = random_instance(n, seed, L=L)
    before = set(enumerate_routes(inst))
    try:
        tight = tighten_time_windows(inst)
    except InfeasibleInstance:
        assert not before
        return
    after = set(enumerate_routes(tight))
    assert before == after
    arcs = eliminate_arcs(tight)
    for r in after:
        assert all((a, b) in arcs for a, b in zip(r, r[1:]))


@pytest.mark.parametrize("seed", range(6))
def test_optimum_unchanged(seed):
    inst = random_instance(5, 40 + seed, L=3)
    a = brute_force_optimal(inst)
    b = brute_force_optimal(tighten_time_windows(inst))
    assert a.objective == pytest.approx(b.objective, abs=1e-6)

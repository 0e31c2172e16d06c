import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darplpt.instance import random_instance
from darplpt.oracle import OracleRefused, brute_force_optimal, enumerate_routes
from darplpt.scheduling import is_feasible, route_cost

from conftest import line_instance


def relabel(inst, perm):
    """Same instance with customer ``i`` renamed ``perm[i - 1]``."""
    n = inst.n
    new_of = list(range(len(inst.locations)))
    for i, p in enumerate(perm, start=1):
        new_of[i], new_of[n + i] = p, n + p
    old_of = np.argsort(new_of)
    locs = tuple(replace(inst.locations[o], id=k) for k, o in enumerate(old_of))
    T = inst.travel_time[np.ix_(old_of, old_of)]
    C = inst.travel_cost[np.ix_(old_of, old_of)]
    return replace(inst, locations=locs, travel_time=T, travel_cost=C)


def set_partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[head] + part[k]] + part[k + 1:]
        yield [[head]] + part


def partition_optimum(inst):
    """Cheapest cover by at most |V| routes, scanning set partitions directly."""
    best_for = {}
    for r in enumerate_routes(inst):
        key = frozenset(i for i in r if 1 <= i <= inst.n)
        best_for[key] = min(best_for.get(key, math.inf), route_cost(r, inst))
    best = math.inf
    for part in set_partitions(list(range(1, inst.n + 1))):
        if len(part) <= inst.num_vehicles:
            best = min(best, sum(best_for.get(frozenset(b), math.inf) for b in part))
    return best


@pytest.mark.parametrize("seed", range(8))
def test_dp_matches_partitions(seed):
    inst = random_instance(3 + seed % 3, 500 + seed, L=2 + seed % 2)
    assert brute_force_optimal(inst).objective == pytest.approx(partition_optimum(inst), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 5000), st.data())
def test_relabel_invariance(n, seed, data):
    inst = random_instance(n, seed)
    perm = data.draw(st.permutations(range(1, n + 1)))
    a = brute_force_optimal(inst).objective
    b = brute_force_optimal(relabel(inst, perm)).objective
    assert a == b or a == pytest.approx(b, abs=1e-9)


def test_routes_are_feasible():
    inst = random_instance(5, 7)
    sol = brute_force_optimal(inst)
    assert sum(route_cost(r, inst) for _, r in sol.routes) == pytest.approx(sol.objective)
    assert all(is_feasible(r, inst, with_depots=True) for _, r in sol.routes)
    assert sorted(i for _, r in sol.routes for i in r if 1 <= i <= inst.n) == list(inst.P)


def test_capacity_forces_split():
    # both riders must travel together in time, but the vehicle seats only one
    pts = [(0, 0), (1, 0), (1, 0), (9, 0), (9, 0)]
    wins = {1: (0, 2), 2: (0, 2), 3: (0, 12), 4: (0, 12)}
    shared = brute_force_optimal(line_instance(pts, wins, Q=2, ride=1000))
    alone = brute_force_optimal(line_instance(pts, wins, Q=1, ride=1000))
    assert len(shared.routes) == 1 and len(alone.routes) == 2
    assert alone.objective > shared.objective


def test_pickup_limit_forces_split():
    pts = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]
    wins = {i: (0, 100) for i in range(1, 5)}
    assert len(brute_force_optimal(line_instance(pts, wins, L=1, ride=1000)).routes) == 2


def test_too_few_vehicles():
    pts = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]
    sol = brute_force_optimal(line_instance(pts, {i: (0, 100) for i in range(1, 5)}, L=1, vehicles=1, ride=1000))
    assert not sol.feasible and sol.objective == math.inf


def test_refuses_large_instances():
    with pytest.raises(OracleRefused):
        brute_force_optimal(random_instance(9, 1))
    with pytest.raises(OracleRefused):
        enumerate_routes(random_instance(4, 1), cap=3)


def test_own_depots_use_each_vehicle_once():
    inst = random_instance(4, 3, multi_depot=3)
    sol = brute_force_optimal(inst)
    used = [v for v, _ in sol.routes]
    assert len(used) == len(set(used))
    total = sum(route_cost(r, inst.vehicle_view(v)) for v, r in sol.routes)
    assert total == pytest.approx(sol.objective)


def test_route_count_matches_orders():
    # without binding windows every precedence order of every small subset is a route
    pts = [(0, 0)] + [(i, 0) for i in range(1, 7)]
    inst = line_instance(pts, {i: (0, 1000) for i in range(1, 7)}, Q=3, L=3, ride=1000)
    orders = {1: 1, 2: 6, 3: 90}  # (2k)! / 2^k
    expected = sum(math.comb(3, k) * orders[k] for k in (1, 2, 3))
    assert len(enumerate_routes(inst)) == expected
    assert len(set(enumerate_routes(inst))) == expected
    assert all(r[0] == 0 and r[-1] == 7 for r in enumerate_routes(inst))
    assert all(len(r) % 2 == 0 for r in itertools.islice(enumerate_routes(inst), 10))

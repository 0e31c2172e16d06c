"""Brute-force reference solver for tiny instances.

Every stop order of every customer subset of size <= L is tried and checked
with the scheduling module; a DP over customer subsets then picks the
cheapest partition into at most |V| routes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .instance import Instance
from .scheduling import Schedule, check_schedule, route_cost

DEFAULT_CAP = 8


class OracleRefused(ValueError):
    pass


@dataclass
class OracleSolution:
    feasible: bool
    objective: float
    routes: list[tuple[Optional[int], tuple[int, ...]]]
    schedules: list[Schedule]


def _orders(customers: tuple[int, ...], n: int):
    """Stop sequences in which each pickup precedes its delivery."""
    def rec(prefix, waiting, onboard):
        if not waiting and not onboard:
            yield tuple(prefix)
            return
        for i in sorted(waiting):
            yield from rec(prefix + [i], waiting - {i}, onboard | {i})
        for i in sorted(onboard):
            yield from rec(prefix + [i + n], waiting, onboard - {i})
    yield from rec([], frozenset(customers), frozenset())


def _view(inst: Instance, v: Optional[int]) -> Instance:
    return inst.vehicle_view(v if v is not None else 0)


def enumerate_routes(inst: Instance, cap: int = DEFAULT_CAP, vehicle: Optional[int] = None) -> list[tuple[int, ...]]:
    """All feasible depot-to-depot routes of one vehicle (view indices)."""
    if inst.n > cap:
        raise OracleRefused(f"n={inst.n} exceeds the oracle cap {cap}")
    view = _view(inst, vehicle)
    n, d = inst.n, 2 * inst.n + 1
    out = []
    for k in range(1, min(inst.L, n) + 1):
        for subset in itertools.combinations(range(1, n + 1), k):
            for order in _orders(subset, n):
                route = (0,) + order + (d,)
                if check_schedule(route, view, with_depots=True) is not None:
                    out.append(route)
    return out


def _best_by_subset(inst: Instance, cap: int, vehicle: Optional[int]) -> dict[int, tuple[float, tuple[int, ...]]]:
    view = _view(inst, vehicle)
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    for r in enumerate_routes(inst, cap, vehicle):
        mask = sum(1 << (i - 1) for i in r if 1 <= i <= inst.n)
        c = route_cost(r, view)
        if mask not in best or (c, r) < best[mask]:
            best[mask] = (c, r)
    return best


def brute_force_optimal(inst: Instance, cap: int = DEFAULT_CAP) -> OracleSolution:
    n = inst.n
    if n > cap:
        raise OracleRefused(f"n={n} exceeds the oracle cap {cap}")
    full = (1 << n) - 1
    if inst.is_multi_depot:
        tables = [_best_by_subset(inst, cap, v) for v in range(inst.num_vehicles)]
        vehicles = list(range(inst.num_vehicles))
    else:
        table = _best_by_subset(inst, cap, None)
        tables = [table] * inst.num_vehicles
        vehicles = [None] * inst.num_vehicles

    # dp[mask] after processing k vehicles: cheapest cover of mask
    inf = math.inf
    dp = [inf] * (full + 1)
    dp[0] = 0.0
    choice = []
    for t in tables:
        new = dp[:]
        pick = [0] * (full + 1)
        for mask in range(1, full + 1):
            sub = mask
            while sub:
                if sub in t and dp[mask ^ sub] + t[sub][0] < new[mask] - 1e-12:
                    new[mask] = dp[mask ^ sub] + t[sub][0]
                    pick[mask] = sub
                sub = (sub - 1) & mask
        choice.append(pick)
        dp = new
    if dp[full] == inf:
        return OracleSolution(False, inf, [], [])
    routes = []
    mask = full
    for k in range(len(tables) - 1, -1, -1):
        sub = choice[k][mask]
        if sub:
            routes.append((vehicles[k], tables[k][sub][1]))
            mask ^= sub
    routes.reverse()
    schedules = [check_schedule(r, _view(inst, v), with_depots=True) for v, r in routes]
    return OracleSolution(True, dp[full], routes, schedules)

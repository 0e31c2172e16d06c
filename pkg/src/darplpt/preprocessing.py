"""Time-window tightening and arc elimination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import EPS, Instance, InstanceError


class InfeasibleInstance(InstanceError):
    pass


@dataclass(frozen=True, eq=False)
class ArcSet:
    allowed: np.ndarray

    def __contains__(self, arc: tuple[int, int]) -> bool:
        return bool(self.allowed[arc])

    def successors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.allowed[i])

    def arcs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.allowed))]


def tighten_time_windows(inst: Instance, max_rounds: int = 100) -> Instance:
    """Shrink customer windows to times reachable from/to the depots and partner.

    Applied rules, repeated to a fixpoint:

    * e_i >= e_o + s_o + T_oi for the earliest origin o, and
      l_i <= l_d - T_id - s_i for the latest-closing destination d;
    * e_{n+i} >= e_i + s_i + T_{i,n+i} and l_i <= l_{n+i} - s_i - T_{i,n+i}.
    """
    T = inst.travel_time
    e = np.array([loc.e for loc in inst.locations], dtype=float)
    l = np.array([loc.l for loc in inst.locations], dtype=float)
    s = np.array([loc.service for loc in inst.locations], dtype=float)
    origins = inst.all_origins()
    dests = inst.all_destinations()
    customers = np.arange(1, 2 * inst.n + 1)
    n = inst.n

    for _ in range(max_rounds):
        e_old, l_old = e.copy(), l.copy()
        if len(customers):
            reach = np.min([e[o] + s[o] + T[o, customers] for o in origins], axis=0)
            e[customers] = np.maximum(e[customers], reach)
            back = np.max([l[d] - T[customers, d] for d in dests], axis=0) - s[customers]
            l[customers] = np.minimum(l[customers], back)
        for i in range(1, n + 1):
            gap = s[i] + T[i, i + n]
            e[i + n] = max(e[i + n], e[i] + gap)
            l[i] = min(l[i], l[i + n] - gap)
        bad = np.flatnonzero(e > l + EPS)
        if len(bad):
            raise InfeasibleInstance(f"time window of location {int(bad[0])} became empty "
                                     f"({e[bad[0]]:.3f} > {l[bad[0]]:.3f})")
        if np.allclose(e, e_old, atol=EPS, rtol=0) and np.allclose(l, l_old, atol=EPS, rtol=0):
            break
    return inst.with_windows(list(zip(e.tolist(), l.tolist())))


def eliminate_arcs(inst: Instance) -> ArcSet:
    """Remove arcs that no feasible route can use.

    Dropped: self loops, time-infeasible arcs, delivery -> own pickup,
    pickup -> destination depot, origin depot -> delivery, anything into an
    origin or out of a destination, and depot-to-depot arcs other than the
    idle arc of a vehicle.
    """
    m = len(inst.locations)
    n = inst.n
    T = inst.travel_time
    e = np.array([loc.e for loc in inst.locations])
    l = np.array([loc.l for loc in inst.locations])
    s = np.array([loc.service for loc in inst.locations])
    allowed = (e[:, None] + s[:, None] + T) <= l[None, :] + EPS
    np.fill_diagonal(allowed, False)

    origins = set(inst.all_origins())
    dests = set(inst.all_destinations())
    depot_ids = origins | dests | {0, 2 * n + 1}
    for j in depot_ids:
        if j not in dests:
            allowed[:, j] = False
        if j not in origins:
            allowed[j, :] = False
    for i in range(1, n + 1):
        allowed[i + n, i] = False
        for d in dests:
            allowed[i, d] = False
        for o in origins:
            allowed[o, i + n] = False
    for o in depot_ids:
        for d in depot_ids:
            allowed[o, d] = False
    if inst.vehicle_depots is None:
        allowed[0, 2 * n + 1] = True
    else:
        for o, d in inst.vehicle_depots:
            allowed[o, d] = True
    # arcs between different customers' pickup-delivery that overload the vehicle
    q = np.array([loc.load_change for loc in inst.locations])
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j and q[i] + q[j] > inst.Q:
                allowed[i, j] = False
                allowed[i, j + n] = False
                allowed[j + n, i + n] = False
    return ArcSet(allowed=allowed)

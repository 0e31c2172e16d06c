"""Route feasibility as a system of difference constraints.

A stop sequence has begin-of-service times ``t`` subject to

* ``t[k+1] >= t[k] + s[k] + T[k, k+1]`` (travel and service),
* ``e[k] <= t[k] <= l[k]`` (time windows),
* ``t[d] - (t[p] + s[p]) <= R`` for each customer with both stops present
  (ride time measured from the end of pickup service),
* ``t[last] - t[first] <= R0`` when the path runs depot to depot.

Every constraint has the form ``t[j] >= t[i] + w``; the least solution is a
longest path from the window lower bounds, computed by Bellman-Ford rounds.
A positive cycle (or a bound above ``l``) means no schedule exists.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .instance import EPS, Instance


class Infeasibility(enum.Enum):
    REPEATED = "repeated location"
    PRECEDENCE = "precedence"
    CAPACITY = "capacity"
    TIME = "time"


@dataclass(frozen=True)
class Schedule:
    stops: tuple[int, ...]
    begin_service: tuple[float, ...]

    @property
    def total_duration(self) -> float:
        if not self.stops:
            return 0.0
        return self.begin_service[-1] - self.begin_service[0]


def _constraints(path: Sequence[int], inst: Instance, with_depots: bool):
    T = inst.travel_time
    locs = inst.locations
    cons = []
    for k in range(len(path) - 1):
        a, b = path[k], path[k + 1]
        cons.append((k, k + 1, locs[a].service + T[a, b]))
    pos = {loc: k for k, loc in enumerate(path)}
    n = inst.n
    for k, i in enumerate(path):
        if 1 <= i <= n:
            kd = pos.get(i + n)
            if kd is not None:
                cons.append((kd, k, -(inst.ride_limit + locs[i].service)))
    if with_depots and len(path) > 1:
        cons.append((len(path) - 1, 0, -inst.R0))
    return cons


def _earliest(path: Sequence[int], inst: Instance, with_depots: bool,
              start: Optional[float] = None) -> Optional[list[float]]:
    locs = inst.locations
    lo = [locs[i].e for i in path]
    hi = [locs[i].l for i in path]
    if start is not None and path:
        lo[0] = max(lo[0], start)
    cons = _constraints(path, inst, with_depots)
    t = lo
    m = len(path)
    for _ in range(m + 1):
        changed = False
        for i, j, w in cons:
            v = t[i] + w
            if v > t[j] + 1e-9:
                if v > hi[j] + EPS:
                    return None
                t[j] = v
                changed = True
        if not changed:
            return t
    return None


def _latest(path: Sequence[int], inst: Instance, with_depots: bool,
            end: Optional[float] = None) -> Optional[list[float]]:
    locs = inst.locations
    lo = [locs[i].e for i in path]
    hi = [locs[i].l for i in path]
    if end is not None and path:
        hi[-1] = min(hi[-1], end)
    cons = _constraints(path, inst, with_depots)
    t = hi
    m = len(path)
    for _ in range(m + 1):
        changed = False
        # t[j] >= t[i] + w  <=>  t[i] <= t[j] - w
        for i, j, w in reversed(cons):
            v = t[j] - w
            if v < t[i] - 1e-9:
                if v < lo[i] - EPS:
                    return None
                t[i] = v
                changed = True
        if not changed:
            return t
    return None


def structural_violation(path: Sequence[int], inst: Instance) -> Optional[Infeasibility]:
    """Cheap checks: repeated stops, delivery before pickup, overload.

    Deliveries whose pickup is absent from the path are allowed (the customer
    boarded earlier); load is counted relative to the path start.
    """
    if len(set(path)) != len(path):
        return Infeasibility.REPEATED
    n = inst.n
    seen = set()
    for i in path:
        if n < i <= 2 * n and (i - n) not in seen and (i - n) in path:
            return Infeasibility.PRECEDENCE
        seen.add(i)
    load = sum(-inst.q(i) for i in path if n < i <= 2 * n and (i - n) not in seen)
    if load > inst.Q:
        return Infeasibility.CAPACITY
    for i in path:
        load += inst.q(i)
        if load > inst.Q:
            return Infeasibility.CAPACITY
    return None


def check_schedule(path: Sequence[int], inst: Instance, with_depots: bool = False) -> Optional[Schedule]:
    """Earliest feasible schedule for ``path``, or None if none exists."""
    if structural_violation(path, inst) is not None:
        return None
    t = _earliest(path, inst, with_depots)
    if t is None:
        return None
    return Schedule(tuple(path), tuple(t))


def why_infeasible(path: Sequence[int], inst: Instance, with_depots: bool = False) -> Optional[Infeasibility]:
    """Reason ``path`` has no feasible schedule, None when it is feasible."""
    reason = structural_violation(path, inst)
    if reason is not None:
        return reason
    if _earliest(path, inst, with_depots) is None:
        return Infeasibility.TIME
    return None


def is_feasible(path: Sequence[int], inst: Instance, with_depots: bool = False) -> bool:
    return structural_violation(path, inst) is None and _earliest(path, inst, with_depots) is not None


def time_envelope(path: Sequence[int], inst: Instance) -> Optional[tuple[float, float]]:
    """(earliest completion, latest start) of a depot-free path."""
    early = _earliest(path, inst, False)
    if early is None:
        return None
    late = _latest(path, inst, False)
    return early[-1], late[0]


def earliest_completion(path: Sequence[int], inst: Instance, start: float) -> Optional[float]:
    """Earliest begin of service at the last stop when the first stop starts no earlier than ``start``."""
    t = _earliest(path, inst, False, start=start)
    return None if t is None else t[-1]


def route_cost(path: Sequence[int], inst: Instance) -> float:
    C = inst.travel_cost
    return float(sum(C[a, b] for a, b in zip(path, path[1:])))


def violated_constraints(schedule: Schedule, inst: Instance, with_depots: bool) -> list[str]:
    """Re-validate a schedule against the raw constraint list (for self-checks)."""
    path, t = schedule.stops, schedule.begin_service
    out = []
    for k, i in enumerate(path):
        if t[k] < inst.e(i) - EPS or t[k] > inst.l(i) + EPS:
            out.append(f"window at {i}")
    for k in range(len(path) - 1):
        a, b = path[k], path[k + 1]
        if t[k + 1] < t[k] + inst.service(a) + inst.travel_time[a, b] - EPS:
            out.append(f"travel {a}->{b}")
    pos = {loc: k for k, loc in enumerate(path)}
    for i in inst.P:
        if i in pos and i + inst.n in pos:
            ride = t[pos[i + inst.n]] - (t[pos[i]] + inst.service(i))
            if ride > inst.ride_limit + EPS:
                out.append(f"ride time of customer {i}")
    if with_depots and path and t[-1] - t[0] > inst.R0 + EPS:
        out.append("route duration")
    return out

"""MILP formulations: arc-based, fragment-flow, pickup-space fragment and path-based.

Fragment formulations share one representation for decoding and separation:
``model.meta["groups"]`` is a list of :class:`EdgeGroup`, each holding a
network and the variable indices of every fragment or node arc in it (one
index per vehicle copy or pickup level).  Summing an edge's variables gives
its multiplicity in an integral solution.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fragments import Fragment
from .instance import Instance, min_fixed_vehicles
from .milp import BINARY, CONTINUOUS, EQ, GE, INTEGER, INT_TOL, LE, Cut, MilpModel
from .network import ChainError, Edge, FragmentNetwork, NodeArc, edge_ends, route_from_chain
from .preprocessing import eliminate_arcs
from .scheduling import is_feasible, route_cost

log = logging.getLogger(__name__)

DEFAULT_PATH_CAP = 5_000_000


class PathCapExceeded(RuntimeError):
    pass


class DecodeError(RuntimeError):
    """An integral solution that does not decompose into chains and cycles."""


def fixed_vehicles(inst: Instance) -> range:
    """Vehicles forced into use by symmetry breaking (none for own-depot fleets)."""
    if inst.is_multi_depot:
        return range(0)
    return range(min(min_fixed_vehicles(inst), inst.num_vehicles))


def views(inst: Instance) -> list[Instance]:
    if inst.is_multi_depot:
        return [inst.vehicle_view(v) for v in range(inst.num_vehicles)]
    return [inst.vehicle_view(0)]


# -- arc-based formulation ----------------------------------------------------

def build_abf(inst: Instance) -> MilpModel:
    n, Q, L = inst.n, inst.Q, inst.L
    m = MilpModel(f"abf-{inst.name}")
    o, d = 0, 2 * n + 1
    fixed = set(fixed_vehicles(inst))
    arcvars: list[dict] = []
    cover = defaultdict(list)
    for v in range(inst.num_vehicles):
        view = inst.vehicle_view(v)
        arcs = eliminate_arcs(view).arcs()
        arcs = [(i, j) for i, j in arcs if i <= d and j <= d]
        f = {}
        for i, j in arcs:
            ub = 0.0 if (i, j) == (o, d) and v in fixed else 1.0
            f[i, j] = m.add_var(f"f[{i},{j},{v}]", BINARY, 0, ub, view.travel_cost[i, j])
        t = [m.add_var(f"t[{i},{v}]", CONTINUOUS, view.e(i), view.l(i)) for i in range(d + 1)]
        q = [m.add_var(f"Q[{i},{v}]", INTEGER, max(0, view.q(i)), min(Q, Q + view.q(i))) for i in range(d + 1)]
        out, inn = defaultdict(list), defaultdict(list)
        for (i, j), k in f.items():
            out[i].append(k)
            inn[j].append(k)
        for i in inst.P:
            cover[i] += out[i]
            m.add_constr([(k, 1) for k in out[i]] + [(k, -1) for k in out[i + n]], EQ, 0, f"pair[{i},{v}]")
        m.add_constr([(k, 1) for k in out[o]], EQ, 1, f"leave[{v}]")
        for i in range(1, d):
            m.add_constr([(k, 1) for k in inn[i]] + [(k, -1) for k in out[i]], EQ, 0, f"flow[{i},{v}]")
        m.add_constr([(k, 1) for k in inn[d]], EQ, 1, f"return[{v}]")
        for (i, j), k in f.items():
            T = view.service(i) + view.travel_time[i, j]
            M = max(0.0, view.l(i) + T - view.e(j))
            if M > 0:
                m.add_constr([(t[i], 1), (t[j], -1), (k, M)], LE, M - T, f"time[{i},{j},{v}]")
            W = min(Q, Q + view.q(i))
            m.add_constr([(q[i], 1), (q[j], -1), (k, W)], LE, W - view.q(j), f"load[{i},{j},{v}]")
        for i in inst.P:
            m.add_constr([(t[i + n], 1), (t[i], -1)], LE, inst.ride_limit + view.service(i), f"ride[{i},{v}]")
            # the ride bound alone does not order pickup before delivery
            m.add_constr([(t[i + n], 1), (t[i], -1)], GE, view.service(i) + view.travel_time[i, i + n], f"order[{i},{v}]")
        m.add_constr([(t[d], 1), (t[o], -1)], LE, inst.R0, f"duration[{v}]")
        m.add_constr([(k, 1) for k in f.values()], LE, 2 * L + 1, f"budget[{v}]")
        arcvars.append(f)
    for i in inst.P:
        m.add_constr([(k, 1) for k in cover[i]], EQ, 1, f"cover[{i}]")
    m.meta.update(formulation="abf", arcvars=arcvars, inst=inst)
    return m


def decode_abf(model: MilpModel, values: Sequence[float]) -> list[tuple[int, tuple[int, ...]]]:
    inst: Instance = model.meta["inst"]
    d = 2 * inst.n + 1
    routes = []
    for v, f in enumerate(model.meta["arcvars"]):
        succ = {i: j for (i, j), k in f.items() if values[k] > 0.5}
        route, cur = [0], 0
        while cur != d:
            if cur not in succ or len(route) > d + 1:
                raise DecodeError(f"vehicle {v}: broken route {route}")
            cur = succ[cur]
            route.append(cur)
        if len(route) > 2:
            routes.append((v, tuple(route)))
    return routes


# -- fragment formulations ------------------------------------------------------

@dataclass(frozen=True)
class PsffLevels:
    L: int

    @property
    def pickup_levels(self) -> range:
        return range(1, self.L + 1)

    @property
    def delivery_levels(self) -> range:
        return range(0, self.L)


@dataclass
class EdgeGroup:
    """Variables of one network copy: ``vars[edge]`` lists the indices to sum."""
    net: FragmentNetwork
    vars: dict = field(default_factory=dict)
    vehicle: Optional[int] = None


@dataclass
class ChainOrCycle:
    edges: list
    closed: bool
    group: int = 0

    @property
    def fragments(self) -> list[Fragment]:
        return [e for e in self.edges if isinstance(e, Fragment)]

    @property
    def arcs(self) -> list[NodeArc]:
        return [e for e in self.edges if isinstance(e, NodeArc)]


def _edge_sort_key(e: Edge):
    if isinstance(e, NodeArc):
        return (1, e.tail.sort_key(), e.head.sort_key(), ())
    return (0, e.start.sort_key(), e.end.sort_key(), e.path)


def _conservation(m: MilpModel, flows: dict, tag: str) -> None:
    """``flows[node] = (in_vars, out_vars)``; one in = out row per node."""
    for key in sorted(flows, key=lambda k: (k[0].sort_key(), k[1:])):
        inn, out = flows[key]
        if not inn and not out:
            continue
        m.add_constr([(k, 1) for k in inn] + [(k, -1) for k in out], EQ, 0, f"{tag}[{key[0].label()},{key[1:]}]")


def build_fff(nets: Sequence[FragmentNetwork], inst: Instance, fixed_use: bool = True) -> MilpModel:
    """Fragment flow model with a copy of the network per vehicle.

    ``nets`` holds a single shared network for one-depot fleets, otherwise
    one per vehicle.
    """
    m = MilpModel(f"fff-{inst.name}")
    fixed = set(fixed_vehicles(inst)) if fixed_use else set()
    groups = []
    cover = defaultdict(list)
    for v in range(inst.num_vehicles):
        net = nets[v] if len(nets) > 1 else nets[0]
        g = EdgeGroup(net, vehicle=v)
        flows = defaultdict(lambda: ([], []))
        picks, frag_vars = [], []
        for f in net.fragments:
            k = m.add_var(f"x[{f!r},{v}]", BINARY, 0, 1, f.cost)
            g.vars[f] = [k]
            flows[(f.start,)][1].append(k)
            flows[(f.end,)][0].append(k)
            picks.append((k, f.pickups))
            frag_vars.append(k)
            for i in f.served:
                if inst.is_pickup(i):
                    cover[i].append(k)
        for a in net.node_arcs:
            k = m.add_var(f"y[{a!r},{v}]", BINARY, 0, 1, a.cost)
            g.vars[a] = [k]
            flows[(a.tail,)][1].append(k)
            flows[(a.head,)][0].append(k)
        lo = 1.0 if v in fixed else 0.0
        w = m.add_var(f"w[{v}]", BINARY, lo, 1)
        src_out = flows.pop((net.source,), ([], []))[1]
        m.add_constr([(k, 1) for k in src_out] + [(w, -1)], EQ, 0, f"use[{v}]")
        flows.pop((net.sink,), None)
        _conservation(m, flows, f"flow{v}")
        m.add_constr(picks, LE, inst.L, f"limit[{v}]")
        if v in fixed:
            m.add_constr([(k, 1) for k in frag_vars], GE, 1, f"fixed[{v}]")
        groups.append(g)
    for i in inst.P:
        m.add_constr([(k, 1) for k in cover[i]], EQ, 1, f"cover[{i}]")
    m.meta.update(formulation="fff", groups=groups, inst=inst, shared=len(nets) == 1)
    return m


def build_psff(nets: Sequence[FragmentNetwork], inst: Instance) -> MilpModel:
    """Pickup-space model: each network copy expanded over remaining-pickup levels.

    A fragment entered at level l (pickups still allowed) leaves at
    l - L_f.  Origin arcs sit at level L, all other node arcs at 0..L-1.
    One-depot fleets share a single network with a fleet cap on origin
    arcs; own-depot fleets get a copy per vehicle, each left at most once.
    """
    L = inst.L
    lv = PsffLevels(L)
    m = MilpModel(f"psff-{inst.name}")
    groups = []
    cover = defaultdict(list)
    multi = len(nets) > 1
    for g_idx, net in enumerate(nets):
        tag = f",{g_idx}" if multi else ""
        g = EdgeGroup(net, vehicle=g_idx if multi else None)
        flows = defaultdict(lambda: ([], []))
        for f in net.fragments:
            g.vars[f] = []
            for l in lv.pickup_levels:
                if l < f.pickups:
                    continue
                k = m.add_var(f"X[{f!r},{l}{tag}]", BINARY, 0, 1, f.cost)
                g.vars[f].append(k)
                flows[(f.start, l)][1].append(k)
                flows[(f.end, l - f.pickups)][0].append(k)
                for i in f.served:
                    if inst.is_pickup(i):
                        cover[i].append(k)
        src_out = []
        for a in net.node_arcs:
            levels = [L] if a.tail == net.source else lv.delivery_levels
            g.vars[a] = []
            for l in levels:
                k = m.add_var(f"Y[{a!r},{l}{tag}]", BINARY, 0, 1, a.cost)
                g.vars[a].append(k)
                flows[(a.tail, l)][1].append(k)
                flows[(a.head, l)][0].append(k)
                if a.tail == net.source:
                    src_out.append(k)
        for key in [k for k in flows if k[0] in (net.source, net.sink)]:
            del flows[key]
        _conservation(m, flows, f"flow{g_idx}")
        cap = 1 if multi else inst.num_vehicles
        m.add_constr([(k, 1) for k in src_out], LE, cap, f"fleet{tag}")
        groups.append(g)
    for i in inst.P:
        m.add_constr([(k, 1) for k in cover[i]], EQ, 1, f"cover[{i}]")
    m.meta.update(formulation="psff", groups=groups, inst=inst, shared=False, levels=lv)
    return m


def multiplicities(group: EdgeGroup, values: Sequence[float]) -> dict:
    out = {}
    for e, ks in group.vars.items():
        s = sum(values[k] for k in ks)
        r = round(s)
        if abs(s - r) > INT_TOL * max(1, len(ks)):
            raise DecodeError(f"fractional value {s:.6f} on {e!r}")
        if r:
            out[e] = int(r)
    return out


def decompose(net: FragmentNetwork, mult: dict) -> list[ChainOrCycle]:
    """Split selected edges into source-sink chains followed by closed walks."""
    out: dict = defaultdict(list)
    for e in sorted(mult, key=_edge_sort_key):
        out[edge_ends(e)[0]].extend([e] * mult[e])
    total = sum(mult.values())
    found = []
    while out[net.source]:
        walk, node = [], net.source
        while node != net.sink:
            if not out[node] or len(walk) > total:
                raise DecodeError(f"flow stops at {node!r}")
            e = out[node].pop(0)
            walk.append(e)
            node = edge_ends(e)[1]
        found.append(ChainOrCycle(walk, closed=False))
    for start in sorted(list(out), key=lambda h: h.sort_key()):
        while out[start]:
            walk, node = [], start
            while True:
                if not out[node] or len(walk) > total:
                    raise DecodeError(f"closed walk breaks at {node!r}")
                e = out[node].pop(0)
                walk.append(e)
                node = edge_ends(e)[1]
                if node == start:
                    break
            found.append(ChainOrCycle(walk, closed=True))
    return found


def _feasible_window(edges: Sequence[Edge], inst: Instance) -> bool:
    try:
        route = route_from_chain(edges, inst, with_depots=True)
    except ChainError:
        return False
    return is_feasible(route, inst, with_depots=True)


def minimal_infeasible_window(edges: Sequence[Edge], inst: Instance) -> Optional[tuple[int, int]]:
    """Shortest contiguous run ``edges[i:j]`` whose stops cannot be scheduled.

    Dropping stops from a feasible route keeps it feasible when travel times
    obey the triangle inequality, so any route containing the run is
    infeasible as well.
    """
    m = len(edges)
    for size in range(1, m + 1):
        for i in range(m - size + 1):
            if not _feasible_window(edges[i:i + size], inst):
                return i, i + size
    return None


def _cut_for(elements: Sequence[Edge], targets: Sequence[EdgeGroup], name: str) -> Cut:
    distinct = sorted(set(elements), key=_edge_sort_key)
    idx = [k for g in targets for e in distinct for k in g.vars.get(e, ())]
    return Cut(idx, [1.0] * len(idx), LE, float(len(distinct) - 1), name)


def separate_cuts(values: Sequence[float], model: MilpModel, replicate: bool = True) -> list[Cut]:
    """Lazy rows excluding infeasible chains and all cycles of an integral solution."""
    form = model.meta["formulation"]
    if form not in ("fff", "psff"):
        return []
    groups: list[EdgeGroup] = model.meta["groups"]
    inst: Instance = model.meta["inst"]
    cuts = []
    seen = set()
    for gi, g in enumerate(groups):
        mult = multiplicities(g, values)
        if not mult:
            continue
        view = inst.vehicle_view(g.vehicle if inst.is_multi_depot and g.vehicle is not None else 0)
        if form == "fff" and replicate and model.meta.get("shared"):
            targets = groups
        else:
            targets = [g]
        for s in decompose(g.net, mult):
            if s.closed:
                elements = s.edges
            else:
                win = minimal_infeasible_window(s.edges, view)
                if win is None:
                    continue
                elements = s.edges[win[0]:win[1]]
            key = (gi if len(targets) == 1 else -1, frozenset(elements))
            if key in seen:
                continue
            seen.add(key)
            cut = _cut_for(elements, targets, f"{'cycle' if s.closed else 'chain'}{len(model.rows) + len(cuts)}")
            if cut.violated(values):
                cuts.append(cut)
    return cuts


def decode_fragment_routes(model: MilpModel, values: Sequence[float]) -> list[tuple[Optional[int], tuple[int, ...]]]:
    """Routes of an accepted (cut-free) solution, in vehicle-view indices."""
    inst: Instance = model.meta["inst"]
    routes = []
    for g in model.meta["groups"]:
        mult = multiplicities(g, values)
        view = inst.vehicle_view(g.vehicle if inst.is_multi_depot and g.vehicle is not None else 0)
        for s in decompose(g.net, mult):
            if s.closed:
                raise DecodeError("solution still contains a cycle")
            routes.append((g.vehicle, route_from_chain(s.edges, view, with_depots=True)))
    return routes


# -- path-based formulation -----------------------------------------------------

@dataclass
class PathSet:
    paths: list[tuple[int, ...]]
    costs: list[float]
    coverage: list[frozenset]
    vehicle: list[Optional[int]]

    def __len__(self) -> int:
        return len(self.paths)

    def cheapest_per_cover(self) -> "PathSet":
        best: dict = {}
        for k, key in enumerate(zip(self.vehicle, self.coverage)):
            if key not in best or self.costs[k] < self.costs[best[key]] - 1e-12:
                best[key] = k
        keep = sorted(best.values())
        return PathSet([self.paths[k] for k in keep], [self.costs[k] for k in keep],
                       [self.coverage[k] for k in keep], [self.vehicle[k] for k in keep])


def _paths_one(view: Instance, cap: int, sink: list, vehicle: Optional[int]) -> None:
    n, L, Q = view.n, view.L, view.Q
    allowed = eliminate_arcs(view).allowed
    T = view.travel_time
    d = 2 * n + 1

    def dfs(path, onboard, load, picked, t):
        last = path[-1]
        if picked and not onboard and allowed[last, d]:
            full = path + [d]
            if is_feasible(full, view, with_depots=True):
                if len(sink) >= cap:
                    raise PathCapExceeded(f"more than {cap} paths")
                cov = frozenset(i for i in full if 1 <= i <= n)
                sink.append((tuple(full), route_cost(full, view), cov, vehicle))
        cands = [i + n for i in sorted(onboard)]
        if picked < L:
            cands += [i for i in range(1, n + 1) if i not in path and load + view.q(i) <= Q]
        for j in sorted(cands):
            if not allowed[last, j]:
                continue
            tj = max(view.e(j), t + view.service(last) + T[last, j])
            if tj > view.l(j) + 1e-6:
                continue
            nxt = path + [j]
            if not is_feasible(nxt, view, with_depots=True):
                continue
            now_on = onboard | {j} if j <= n else onboard - {j - n}
            # someone who cannot be dropped off next cannot be dropped off later
            if any(not is_feasible(nxt + [c + n], view, with_depots=True) for c in now_on):
                continue
            if j <= n:
                dfs(nxt, onboard | {j}, load + view.q(j), picked + 1, tj)
            else:
                dfs(nxt, onboard - {j - n}, load + view.q(j), picked, tj)

    dfs([0], frozenset(), 0, 0, view.e(0))


def enumerate_paths(inst: Instance, cap: int = DEFAULT_PATH_CAP) -> PathSet:
    """All schedule-feasible depot-to-depot routes with 1..L customers.

    Own-depot fleets get the routes of every vehicle, tagged with its index.
    """
    found: list = []
    if inst.is_multi_depot:
        for v in range(inst.num_vehicles):
            _paths_one(inst.vehicle_view(v), cap, found, v)
    else:
        _paths_one(inst.vehicle_view(0), cap, found, None)
    if not found:
        return PathSet([], [], [], [])
    paths, costs, cov, veh = (list(x) for x in zip(*found))
    return PathSet(paths, costs, cov, veh)


def build_pbf(paths: PathSet, inst: Instance, dedupe: bool = True) -> MilpModel:
    ps = paths.cheapest_per_cover() if dedupe else paths
    m = MilpModel(f"pbf-{inst.name}")
    cover = defaultdict(list)
    per_vehicle = defaultdict(list)
    zs = []
    for k in range(len(ps)):
        z = m.add_var(f"z[{k}]", BINARY, 0, 1, ps.costs[k])
        zs.append(z)
        for i in ps.coverage[k]:
            cover[i].append(z)
        per_vehicle[ps.vehicle[k]].append(z)
    for i in inst.P:
        m.add_constr([(z, 1) for z in cover[i]], EQ, 1, f"cover[{i}]")
    if inst.is_multi_depot:
        for v in sorted(k for k in per_vehicle):
            m.add_constr([(z, 1) for z in per_vehicle[v]], LE, 1, f"vehicle[{v}]")
    elif zs:
        m.add_constr([(z, 1) for z in zs], LE, inst.num_vehicles, "fleet")
    m.meta.update(formulation="pbf", paths=ps, inst=inst)
    return m


def decode_pbf(model: MilpModel, values: Sequence[float]) -> list[tuple[Optional[int], tuple[int, ...]]]:
    ps: PathSet = model.meta["paths"]
    return [(ps.vehicle[k], ps.paths[k]) for k in range(len(ps)) if values[k] > 0.5]


def decode_routes(model: MilpModel, values: Sequence[float]) -> list[tuple[Optional[int], tuple[int, ...]]]:
    form = model.meta["formulation"]
    if form == "abf":
        return decode_abf(model, values)
    if form == "pbf":
        return decode_pbf(model, values)
    return decode_fragment_routes(model, values)


# -- solution check ----------------------------------------------------------------

@dataclass
class SolutionCheck:
    cost: float
    problems: list[str]

    @property
    def ok(self) -> bool:
        return not self.problems


def check_solution(routes: Sequence[tuple[Optional[int], tuple[int, ...]]], inst: Instance) -> SolutionCheck:
    """Re-cost decoded routes and list every violated requirement."""
    problems = []
    served = []
    cost = 0.0
    used = [v for v, _ in routes if v is not None]
    if len(used) != len(set(used)):
        problems.append("a vehicle runs more than one route")
    if len(routes) > inst.num_vehicles:
        problems.append(f"{len(routes)} routes for {inst.num_vehicles} vehicles")
    for v, r in routes:
        view = inst.vehicle_view(v if inst.is_multi_depot and v is not None else 0)
        if r[0] != 0 or r[-1] != 2 * inst.n + 1:
            problems.append(f"route {r} does not run depot to depot")
        picks = [i for i in r if inst.is_pickup(i)]
        served += picks
        if len(picks) > inst.L:
            problems.append(f"route {r} has {len(picks)} pickups")
        if not is_feasible(r, view, with_depots=True):
            problems.append(f"route {r} is infeasible")
        cost += route_cost(r, view)
    if sorted(served) != list(inst.P):
        problems.append(f"customers served {sorted(served)}")
    return SolutionCheck(cost, problems)

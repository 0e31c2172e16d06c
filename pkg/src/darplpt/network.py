"""Fragment-based network: load nodes, fragments and node arcs."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .fragments import EMPTY, Fragment, FragmentSet, LoadNode, make_fragment
from .instance import EPS, Instance, MdarpConfig
from .preprocessing import ArcSet, eliminate_arcs
from .scheduling import is_feasible


class ChainError(ValueError):
    """A chain of fragments and node arcs whose endpoints do not match."""


@dataclass(frozen=True, order=True)
class NodeArc:
    tail: LoadNode
    head: LoadNode
    cost: float = field(compare=False, default=0.0)

    def __repr__(self) -> str:
        return f"{self.tail!r}->{self.head!r}"


Edge = Union[Fragment, NodeArc]


def edge_ends(e: Edge) -> tuple[LoadNode, LoadNode]:
    if isinstance(e, NodeArc):
        return e.tail, e.head
    return e.start, e.end


@dataclass
class FragmentNetwork:
    inst: Instance
    source: LoadNode
    sink: LoadNode
    fragments: list[Fragment]
    node_arcs: list[NodeArc]
    kind: str = ""
    frags_out: dict[LoadNode, list[Fragment]] = field(default_factory=dict, repr=False)
    frags_in: dict[LoadNode, list[Fragment]] = field(default_factory=dict, repr=False)
    arcs_out: dict[LoadNode, list[NodeArc]] = field(default_factory=dict, repr=False)
    arcs_in: dict[LoadNode, list[NodeArc]] = field(default_factory=dict, repr=False)
    frags_at: dict[int, list[Fragment]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.reindex()

    def reindex(self) -> None:
        self.frags_out, self.frags_in = defaultdict(list), defaultdict(list)
        self.arcs_out, self.arcs_in = defaultdict(list), defaultdict(list)
        self.frags_at = defaultdict(list)
        n = self.inst.n
        for f in self.fragments:
            self.frags_out[f.start].append(f)
            self.frags_in[f.end].append(f)
            for i in f.served:
                if 1 <= i <= n:
                    self.frags_at[i].append(f)
        for a in self.node_arcs:
            self.arcs_out[a.tail].append(a)
            self.arcs_in[a.head].append(a)

    @property
    def nodes(self) -> list[LoadNode]:
        found = {self.source, self.sink}
        for f in self.fragments:
            found.update((f.start, f.end))
        return sorted(found, key=LoadNode.sort_key)

    @property
    def inner_nodes(self) -> list[LoadNode]:
        return [h for h in self.nodes if h not in (self.source, self.sink)]

    def non_depot_arcs(self) -> list[NodeArc]:
        return [a for a in self.node_arcs if a.tail != self.source and a.head != self.sink]

    def edge_list(self) -> str:
        """Plain-text export: one ``F``/``A`` line per fragment or node arc."""
        lines = [f"# source {self.source.label()} sink {self.sink.label()}"]
        for f in self.fragments:
            lines.append(f"F {f.start.label()} {f.end.label()} {','.join(map(str, f.path))} {f.cost:.6f}")
        for a in self.node_arcs:
            lines.append(f"A {a.tail.label()} {a.head.label()} {a.cost:.6f}")
        return "\n".join(lines) + "\n"


def _usable_fragments(fragments: Sequence[Fragment], inst: Instance) -> list[Fragment]:
    """Fragments that fit between this network's depots on their own."""
    o, d = inst.origin, inst.destination
    keep = []
    for f in fragments:
        served = f.served
        path = (o,) + served + (d,)
        if f.extended and f.path[-1] == d:
            path = (o,) + f.path
        if is_feasible(path, inst, with_depots=True):
            keep.append(f)
    return keep


def build_network(fset: FragmentSet | Sequence[Fragment], inst: Instance, arcs: Optional[ArcSet] = None,
                  prune: bool = True) -> FragmentNetwork:
    """Assemble nodes, fragments and node arcs.

    Node arcs join a delivery node (or the origin depot) to a pickup node with
    the same load set, and empty delivery nodes to the destination depot.  The
    origin only reaches pickup nodes with an empty load set.  An arc is dropped
    when no fragment ending at its tail can be followed in time by a fragment
    starting at its head.
    """
    kind = getattr(fset, "kind", "")
    arcs = arcs if arcs is not None else eliminate_arcs(inst)
    allowed = arcs.allowed
    C, T = inst.travel_cost, inst.travel_time
    source, sink = LoadNode(inst.origin), LoadNode(inst.destination)
    fragments = _usable_fragments(list(fset), inst)
    n = inst.n

    starts: dict[LoadNode, list[Fragment]] = defaultdict(list)
    ends: dict[LoadNode, list[Fragment]] = defaultdict(list)
    for f in fragments:
        starts[f.start].append(f)
        ends[f.end].append(f)

    pickup_by_load: dict[frozenset, list[LoadNode]] = defaultdict(list)
    for h in starts:
        if 1 <= h.loc <= n:
            pickup_by_load[h.loadset].append(h)
    latest_start = {h: max(f.latest_start for f in fs) for h, fs in starts.items()}
    earliest_end = {h: min(f.earliest_end for f in fs) for h, fs in ends.items()}

    node_arcs = []

    def admissible(tail: LoadNode, head: LoadNode, ready: float) -> bool:
        if not allowed[tail.loc, head.loc]:
            return False
        if not prune:
            return True
        arrive = ready + inst.service(tail.loc) + T[tail.loc, head.loc]
        limit = latest_start[head] if head in latest_start else inst.l(head.loc)
        return arrive <= limit + EPS

    for h in sorted(pickup_by_load.get(EMPTY, []), key=LoadNode.sort_key):
        if admissible(source, h, inst.e(source.loc)):
            node_arcs.append(NodeArc(source, h, float(C[source.loc, h.loc])))
    for tail in sorted(ends, key=LoadNode.sort_key):
        if not n < tail.loc <= 2 * n:
            continue
        ready = earliest_end[tail]
        for head in sorted(pickup_by_load.get(tail.loadset, []), key=LoadNode.sort_key):
            if inst.customer(tail.loc) == head.loc:
                continue
            if admissible(tail, head, ready):
                node_arcs.append(NodeArc(tail, head, float(C[tail.loc, head.loc])))
        if not tail.loadset and admissible(tail, sink, ready):
            node_arcs.append(NodeArc(tail, sink, float(C[tail.loc, sink.loc])))
    return FragmentNetwork(inst, source, sink, fragments, node_arcs, kind=kind)


def route_from_chain(chain: Sequence[Edge], inst: Optional[Instance] = None, with_depots: bool = True) -> tuple[int, ...]:
    """Location sequence of an alternating chain of node arcs and fragments.

    Consecutive edges must meet at identical load nodes.  The trailing stop of
    an extended fragment coincides with the first stop of its successor and is
    emitted once.  Depot locations at the chain ends are kept when
    ``with_depots`` is true, and added from ``inst`` if the chain lacks them.
    """
    route: list[int] = []
    prev_end: Optional[LoadNode] = None
    for e in chain:
        tail, head = edge_ends(e)
        if prev_end is not None and prev_end != tail:
            raise ChainError(f"chain breaks between {prev_end!r} and {tail!r}")
        prev_end = head
        if isinstance(e, NodeArc):
            if not route or route[-1] != tail.loc:
                route.append(tail.loc)
            route.append(head.loc)
        else:
            path = list(e.path)
            if route and route[-1] == path[0]:
                path = path[1:]
            route.extend(path)
    if inst is not None:
        o, d = inst.origin, inst.destination
        if with_depots:
            if not route or route[0] != o:
                route.insert(0, o)
            if route[-1] != d:
                route.append(d)
        else:
            route = [i for i in route if not inst.is_depot(i)]
    return tuple(route)


def vehicle_networks(fset_for, inst: Instance, arcs_for=None) -> list[FragmentNetwork]:
    """One network per vehicle; ``fset_for(v)`` returns the fragment set on ``inst.vehicle_view(v)``."""
    nets = []
    for v in range(inst.num_vehicles):
        view = inst.vehicle_view(v)
        arcs = arcs_for(v) if arcs_for else None
        nets.append(build_network(fset_for(v), view, arcs))
    return nets


def attach_vehicle_copies(net: FragmentNetwork, inst: Instance, cfg: Optional[MdarpConfig] = None) -> list[FragmentNetwork]:
    """Per-vehicle copies of a network, re-anchored at each vehicle's depots.

    Fragments that cannot fit between a vehicle's own depots are left out of
    that vehicle's copy.  Single-depot instances yield the network itself.
    """
    if not inst.is_multi_depot:
        return [net]
    count = len(cfg.drivers) if cfg is not None else inst.num_vehicles
    out = []
    for v in range(count):
        view = inst.vehicle_view(v)
        frags = []
        for f in net.fragments:
            if view.is_depot(f.path[-1]):
                # depot-bound extensions are priced against this vehicle's destination
                f = make_fragment(view, f.start, f.end, f.path, f.kind)
            if f is not None:
                frags.append(f)
        out.append(build_network(frags, view))
    return out

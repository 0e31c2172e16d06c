"""Fragment enumeration: full, restricted, extended and mixed fragment sets.

A fragment is a piece of a route path between two load nodes.  A load node
is a location together with the customers on board (excluding the
location's own customer).  Extended fragments carry one trailing stop, a
pickup or the destination depot, that belongs to the *next* fragment: it is
part of the path (and of the cost) but not served by this fragment.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .instance import EPS, Instance
from .preprocessing import ArcSet, eliminate_arcs
from .scheduling import is_feasible, route_cost, time_envelope

FF, RF, EFF, ERF = "FF", "RF", "EFF", "ERF"
SET_KINDS = ("ff", "rf", "eff", "erf", "mf")

EMPTY: frozenset[int] = frozenset()


@dataclass(frozen=True, order=True)
class LoadNode:
    loc: int
    loadset: frozenset[int] = EMPTY

    def label(self) -> str:
        return f"{self.loc}:{','.join(map(str, sorted(self.loadset)))}"

    def sort_key(self) -> tuple:
        return (self.loc, tuple(sorted(self.loadset)))

    def __repr__(self) -> str:
        return f"({self.label()})"


@dataclass(frozen=True, eq=False)
class Fragment:
    start: LoadNode
    end: LoadNode
    path: tuple[int, ...]
    pickups: int
    cost: float
    kind: str
    earliest_end: float = 0.0
    latest_start: float = 0.0

    @property
    def extended(self) -> bool:
        return self.kind in (EFF, ERF)

    @property
    def served(self) -> tuple[int, ...]:
        """Stops served by this fragment (drops the trailing stop of extended ones)."""
        return self.path[:-1] if self.extended else self.path

    def key(self) -> tuple:
        return (self.start.sort_key(), self.end.sort_key(), self.path)

    def __eq__(self, other) -> bool:
        return isinstance(other, Fragment) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"{self.start!r}-{self.path}-{self.end!r}"


@dataclass
class FragmentSet:
    kind: str
    fragments: list[Fragment]
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.fragments)

    def __iter__(self) -> Iterator[Fragment]:
        return iter(self.fragments)


class _Context:
    """Instance data pre-extracted for the enumeration loops."""

    def __init__(self, inst: Instance, arcs: Optional[ArcSet] = None):
        self.inst = inst
        self.n = inst.n
        self.arcs = arcs if arcs is not None else eliminate_arcs(inst)
        self.allowed = self.arcs.allowed
        self.q = [loc.load_change for loc in inst.locations]
        self._memo: dict[tuple, bool] = {}

    def ok(self, path) -> bool:
        hit = self._memo.get(path)
        if hit is None:
            hit = self._memo[path] = is_feasible(path, self.inst, with_depots=False)
        return hit

    def closable(self, path, onboard) -> bool:
        """Every customer on board can still be dropped off right away.

        If one cannot, no longer continuation can drop them off either, since
        removing stops never breaks a schedule under the triangle inequality.
        """
        n = self.n
        return all(self.ok(path + (c + n,)) for c in onboard)


def make_fragment(inst: Instance, start: LoadNode, end: LoadNode, path: tuple[int, ...], kind: str) -> Optional[Fragment]:
    """Build a fragment with cost and time envelope; None if its path is infeasible."""
    env = time_envelope(path, inst)
    if env is None:
        return None
    served = path[:-1] if kind in (EFF, ERF) else path
    pickups = sum(1 for i in served if 1 <= i <= inst.n)
    return Fragment(start, end, path, pickups, route_cost(path, inst), kind, env[0], env[1])


def canonical(frags: Iterable[Fragment]) -> list[Fragment]:
    uniq = {f.key(): f for f in frags}
    return [uniq[k] for k in sorted(uniq, key=lambda k: (k[2], k[0], k[1]))]


def decompose_nodes(path: tuple[int, ...], n: int, onboard: Iterable[int] = ()) -> list[LoadNode]:
    """Load node at every stop of ``path`` given customers on board before it."""
    cur = set(onboard)
    nodes = []
    for i in path:
        c = i if i <= n else i - n
        if 1 <= i <= n:
            nodes.append(LoadNode(i, frozenset(cur)))
            cur.add(c)
        elif n < i <= 2 * n:
            cur.discard(c)
            nodes.append(LoadNode(i, frozenset(cur)))
        else:
            nodes.append(LoadNode(i, frozenset(cur)))
    return nodes


# -- full fragments ---------------------------------------------------------

def _full_fragment_paths(ctx: _Context, only_ppdd: bool = False) -> Iterator[tuple[int, ...]]:
    inst, n, allowed, q = ctx.inst, ctx.n, ctx.allowed, ctx.q
    Q, L = inst.Q, inst.L

    def dfs(path, onboard, load, picked, delivering):
        last = path[-1]
        for c in sorted(onboard):
            j = c + n
            if not allowed[last, j]:
                continue
            nxt = path + (j,)
            if not ctx.ok(nxt):
                continue
            rest = onboard - {c}
            if not rest:
                yield nxt
            else:
                yield from dfs(nxt, rest, load + q[j], picked, True)
        if (delivering and only_ppdd) or len(picked) >= L:
            return
        for j in range(1, n + 1):
            if j in picked or not allowed[last, j] or load + q[j] > Q:
                continue
            nxt = path + (j,)
            if not ctx.ok(nxt) or not ctx.closable(nxt, onboard | {j}):
                continue
            yield from dfs(nxt, onboard | {j}, load + q[j], picked | {j}, delivering)

    for i in range(1, n + 1):
        if not ctx.ok((i,)) or not ctx.closable((i,), (i,)):
            continue
        yield from dfs((i,), frozenset({i}), q[i], frozenset({i}), False)


def enumerate_full_fragments(inst: Instance, arcs: Optional[ArcSet] = None, dominance: bool = True) -> FragmentSet:
    """All feasible full fragments (load empty only at both ends) with at most L pickups."""
    t0 = time.perf_counter()
    ctx = _Context(inst, arcs)
    frags = []
    for path in _full_fragment_paths(ctx):
        f = make_fragment(inst, LoadNode(path[0]), LoadNode(path[-1]), path, FF)
        if f is not None:
            frags.append(f)
    raw = len(frags)
    out = FragmentSet("ff", canonical(frags))
    if dominance:
        out = dominance_filter(out, inst)
    out.stats.update(generated=raw, count=len(out), seconds=time.perf_counter() - t0)
    return out


# -- restricted fragments ---------------------------------------------------

def restricted_substrings(path: tuple[int, ...], n: int) -> list[tuple[LoadNode, tuple[int, ...], LoadNode]]:
    """Every pickup-to-delivery substring of a "pickups then deliveries" path with its load nodes."""
    k = sum(1 for i in path if 1 <= i <= n)
    out = []
    for a in range(k):
        start_load = frozenset(path[:a])
        for b in range(k, len(path)):
            end_load = frozenset(i - n for i in path[b + 1:])
            out.append((LoadNode(path[a], start_load), path[a:b + 1], LoadNode(path[b], end_load)))
    return out


def enumerate_restricted_fragments(inst: Instance, arcs: Optional[ArcSet] = None) -> FragmentSet:
    """Restricted fragments from the substrings of all "pppddd" full fragments."""
    t0 = time.perf_counter()
    ctx = _Context(inst, arcs)
    seen: dict[tuple, Fragment] = {}
    parents = 0
    for path in _full_fragment_paths(ctx, only_ppdd=True):
        parents += 1
        for start, sub, end in restricted_substrings(path, inst.n):
            f = make_fragment(inst, start, end, sub, RF)
            if f is not None:
                seen.setdefault(f.key(), f)
    out = FragmentSet("rf", canonical(seen.values()))
    out.stats.update(parents=parents, count=len(out), seconds=time.perf_counter() - t0)
    return out


# -- extended fragments -----------------------------------------------------

def extend_fragments(base: FragmentSet, inst: Instance, arcs: Optional[ArcSet] = None,
                     dominance: bool = True) -> FragmentSet:
    """Append one trailing pickup or the destination depot to every fragment.

    A trailing pickup ``j`` is kept only if the path followed by ``j`` and its
    delivery has a feasible schedule; the depot only when nobody is on board.
    """
    if base.kind not in ("ff", "rf"):
        raise ValueError(f"can only extend ff or rf sets, got {base.kind}")
    t0 = time.perf_counter()
    ctx = _Context(inst, arcs)
    n, allowed, q = inst.n, ctx.allowed, ctx.q
    dest = inst.destination
    kind = EFF if base.kind == "ff" else ERF
    out = []
    for f in base:
        last = f.path[-1]
        involved = set(f.start.loadset) | set(f.end.loadset) | {inst.customer(i) for i in f.path}
        load = sum(q[c] for c in f.end.loadset)
        total_pickups = len(f.start.loadset) + f.pickups
        if not f.end.loadset and allowed[last, dest]:
            g = make_fragment(inst, f.start, LoadNode(dest), f.path + (dest,), kind)
            if g is not None:
                out.append(g)
        if total_pickups + 1 > inst.L:
            continue
        for j in range(1, n + 1):
            if j in involved or not allowed[last, j] or load + q[j] > inst.Q:
                continue
            if not ctx.ok(f.path + (j, j + n)):
                continue
            g = make_fragment(inst, f.start, LoadNode(j, f.end.loadset), f.path + (j,), kind)
            if g is not None:
                out.append(g)
    res = FragmentSet("eff" if kind == EFF else "erf", canonical(out))
    if dominance:
        res = dominance_filter(res, inst)
    res.stats.update(base=len(base), count=len(res), seconds=time.perf_counter() - t0)
    return res


# -- mixed set --------------------------------------------------------------

def split_points(path: tuple[int, ...], n: int) -> list[int]:
    """Positions of pickups whose predecessor is a delivery."""
    return [k for k in range(1, len(path)) if 1 <= path[k] <= n and n < path[k - 1] <= 2 * n]


def split_full_fragment(path: tuple[int, ...], n: int) -> list[tuple[LoadNode, tuple[int, ...], LoadNode, str]]:
    """Pieces of a full fragment: extended pieces up to each cut pickup, then a final restricted piece."""
    cuts = split_points(path, n)
    if not cuts:
        return [(LoadNode(path[0]), path, LoadNode(path[-1]), FF)]
    nodes = decompose_nodes(path, n)
    bounds = [0] + cuts
    pieces = []
    for a, b in zip(bounds, cuts):
        pieces.append((nodes[a], path[a:b + 1], nodes[b], ERF))
    pieces.append((nodes[cuts[-1]], path[cuts[-1]:], nodes[-1], RF))
    return pieces


def build_mixed_set(s_ff: FragmentSet, inst: Instance) -> FragmentSet:
    if s_ff.kind != "ff":
        raise ValueError("mixed set is derived from a full-fragment set")
    t0 = time.perf_counter()
    seen: dict[tuple, Fragment] = {}
    for f in s_ff:
        for start, path, end, kind in split_full_fragment(f.path, inst.n):
            g = make_fragment(inst, start, end, path, kind)
            if g is not None:
                seen.setdefault(g.key(), g)
    out = FragmentSet("mf", canonical(seen.values()))
    out.stats.update(base=len(s_ff), count=len(out), seconds=time.perf_counter() - t0)
    return out


# -- dominance --------------------------------------------------------------

def _duration(path, inst: Instance) -> float:
    T = inst.travel_time
    return sum(inst.service(a) + T[a, b] for a, b in zip(path, path[1:]))


def dominates(f: Fragment, g: Fragment, inst: Instance) -> bool:
    """True if ``f`` can replace ``g`` in every route (same nodes and customers)."""
    if f.start != g.start or f.end != g.end or set(f.path) != set(g.path):
        return False
    if f.start.loadset or f.end.loadset:
        # partially served customers make the envelope insufficient
        return False
    le = (f.cost <= g.cost + EPS and _duration(f.path, inst) <= _duration(g.path, inst) + EPS
          and f.earliest_end <= g.earliest_end + EPS and f.latest_start >= g.latest_start - EPS)
    if not le:
        return False
    strict = (f.cost < g.cost - EPS or f.earliest_end < g.earliest_end - EPS
              or f.latest_start > g.latest_start + EPS)
    return strict or f.path < g.path


def dominance_filter(fset: FragmentSet, inst: Instance) -> FragmentSet:
    """Drop fragments beaten on cost and time envelope by one with the same nodes and customers.

    Only fragments that start and end with an empty vehicle are compared.
    """
    groups: dict[tuple, list[Fragment]] = {}
    keep = []
    for f in fset:
        if f.start.loadset or f.end.loadset:
            keep.append(f)
            continue
        groups.setdefault((f.start, f.end, frozenset(f.path)), []).append(f)
    removed = 0
    for group in groups.values():
        for g in group:
            if any(f is not g and dominates(f, g, inst) for f in group):
                removed += 1
            else:
                keep.append(g)
    out = FragmentSet(fset.kind, canonical(keep), dict(fset.stats))
    out.stats["dominated"] = fset.stats.get("dominated", 0) + removed
    return out


# -- front door -------------------------------------------------------------

def generate(kind: str, inst: Instance, arcs: Optional[ArcSet] = None, dominance: bool = True) -> FragmentSet:
    """Generate the fragment set named ``kind`` (ff, rf, eff, erf or mf)."""
    kind = kind.lower()
    if kind == "ff":
        return enumerate_full_fragments(inst, arcs, dominance)
    if kind == "rf":
        return enumerate_restricted_fragments(inst, arcs)
    if kind == "eff":
        return extend_fragments(enumerate_full_fragments(inst, arcs, dominance), inst, arcs, dominance)
    if kind == "erf":
        return extend_fragments(enumerate_restricted_fragments(inst, arcs), inst, arcs, dominance)
    if kind == "mf":
        return build_mixed_set(enumerate_full_fragments(inst, arcs, dominance), inst)
    raise ValueError(f"unknown fragment set {kind!r}; expected one of {SET_KINDS}")


def dump_line(f: Fragment) -> str:
    return f"{f.kind} {f.start.label()} {','.join(map(str, f.path))} {f.end.label()} {f.cost:.6f}"


def dump(fset: FragmentSet) -> str:
    return "".join(dump_line(f) + "\n" for f in fset)


def parse_dump_line(line: str) -> tuple[str, LoadNode, tuple[int, ...], LoadNode, float]:
    kind, start, path, end, cost = line.split()

    def node(tok: str) -> LoadNode:
        loc, _, loads = tok.partition(":")
        return LoadNode(int(loc), frozenset(int(c) for c in loads.split(",") if c))

    return kind, node(start), tuple(int(i) for i in path.split(",")), node(end), float(cost)


def rf_decomposition(route: tuple[int, ...], n: int) -> list[tuple[LoadNode, tuple[int, ...], LoadNode]]:
    """Split a depot-free route path into restricted fragments at every delivery-to-pickup step."""
    if not route:
        return []
    nodes = decompose_nodes(route, n)
    cuts = [k for k in range(1, len(route)) if 1 <= route[k] <= n and n < route[k - 1] <= 2 * n]
    bounds = [0] + cuts + [len(route)]
    return [(nodes[a], route[a:b], nodes[b - 1]) for a, b in zip(bounds, bounds[1:])]

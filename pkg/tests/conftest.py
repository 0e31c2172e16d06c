import os
from functools import lru_cache
from pathlib import Path

import pytest

from darplpt.fragments import RF, make_fragment, rf_decomposition
from darplpt.instance import Instance, Location, euclidean_matrix, random_instance
from darplpt.network import NodeArc
from darplpt.oracle import brute_force_optimal
from darplpt.preprocessing import tighten_time_windows

REPO = Path(__file__).resolve().parents[1]

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def data_dirs() -> list[Path]:
    dirs = []
    if os.environ.get("DARPLPT_DATA"):
        dirs.append(Path(os.environ["DARPLPT_DATA"]))
    dirs.append(REPO / "data" / "instances")
    return dirs


def find_instance(name: str):
    for d in data_dirs():
        for cand in (d / name, d / f"{name}.txt", d / f"{name}.dat"):
            if cand.is_file():
                return cand
    return None


def corpus_params(k: int) -> tuple[int, int, int]:
    """(n, L, seed) of the k-th instance in the 50-instance equivalence corpus."""
    return 3 + k % 4, 2 + (k // 4) % 3, 100 + k


@lru_cache(maxsize=None)
def corpus_instance(k: int) -> Instance:
    n, L, seed = corpus_params(k)
    return random_instance(n, seed, L=L)


@lru_cache(maxsize=None)
def corpus_oracle(k: int):
    return brute_force_optimal(tighten_time_windows(corpus_instance(k)))


def line_instance(points, windows, service=0.0, Q=3, L=3, vehicles=2, ride=100.0, horizon=1000.0, loads=None) -> Instance:
    """Hand-made instance: ``points`` lists depot, pickups, deliveries (depot is reused at the end)."""
    n = (len(points) - 1) // 2
    loads = loads or [1] * n
    locs = [Location(0, *points[0], 0.0, 0, 0.0, horizon)]
    for i in range(n):
        locs.append(Location(i + 1, *points[i + 1], service, loads[i], *windows[i + 1]))
    for i in range(n):
        locs.append(Location(n + i + 1, *points[n + i + 1], service, -loads[i], *windows[n + i + 1]))
    locs.append(Location(2 * n + 1, *points[0], 0.0, 0, 0.0, horizon))
    dist = euclidean_matrix(locs)
    inst = Instance(n=n, locations=tuple(locs), Q=Q, L=L, num_vehicles=vehicles, R0=horizon,
                    ride_limit=ride, travel_time=dist, travel_cost=dist.copy(), name="hand")
    inst.validate()
    return inst


@pytest.fixture
def small_instances():
    return [random_instance(n, s, L=L) for n, s, L in [(3, 1, 2), (4, 2, 3), (5, 3, 3), (5, 4, 4)]]


def rf_walk(route, net, inst):
    """The RF-network walk of a depot-to-depot route, or None if some piece is missing."""
    by_key = {f.key(): f for f in net.fragments}
    arcs = set(net.node_arcs)
    walk, prev = [], net.source
    for start, path, end in rf_decomposition(route[1:-1], inst.n):
        f = make_fragment(inst, start, end, path, RF)
        if f is None or f.key() not in by_key:
            return None
        a = NodeArc(prev, start)
        if a not in arcs:
            return None
        walk += [a, by_key[f.key()]]
        prev = end
    last = NodeArc(prev, net.sink)
    return walk + [last] if last in arcs else None


def encode_fragment_solution(model, routes):
    """0/1 vector of a fragment model (FFF or PSFF) that realises ``routes``."""
    inst = model.meta["inst"]
    groups = model.meta["groups"]
    form = model.meta["formulation"]
    x = [0.0] * model.num_vars
    for slot, (v, route) in enumerate(routes):
        if inst.is_multi_depot:
            g = groups[v]
        else:
            g = groups[slot] if form == "fff" else groups[0]
        walk = rf_walk(route, g.net, inst.vehicle_view(g.vehicle if inst.is_multi_depot else 0))
        if walk is None:
            raise ValueError(f"route {route} is not a walk of the network")
        if form == "fff":
            for e in walk:
                x[g.vars[e][0]] += 1
            x[model.index[f"w[{g.vehicle}]"]] = 1
            continue
        level = inst.L
        for e in walk:
            if isinstance(e, NodeArc):
                x[g.vars[e][0 if e.tail == g.net.source else level]] += 1
            else:
                x[g.vars[e][level - e.pickups]] += 1
                level -= e.pickups
    return x

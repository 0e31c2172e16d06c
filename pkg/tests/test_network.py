import pytest
from hypothesis import given, settings, strategies as st

from darplpt.fragments import RF, LoadNode, generate, make_fragment
from darplpt.instance import random_instance
from darplpt.network import ChainError, NodeArc, attach_vehicle_copies, build_network, route_from_chain
from darplpt.oracle import enumerate_routes
from darplpt.pipeline import fragment_networks
from darplpt.preprocessing import tighten_time_windows

from conftest import line_instance, rf_walk


@pytest.mark.parametrize("seed", range(6))
def test_every_route_is_a_walk(seed):
    inst = tighten_time_windows(random_instance(5, 300 + seed, L=3))
    net = build_network(generate("rf", inst), inst)
    for r in enumerate_routes(inst):
        walk = rf_walk(r, net, inst)
        assert walk is not None, r
        assert route_from_chain(walk, inst) == r


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 7), st.integers(0, 5000), st.integers(2, 4))
def test_ff_arc_bound(n, seed, L):
    inst = tighten_time_windows(random_instance(n, seed, L=L))
    net = build_network(generate("ff", inst), inst)
    assert len(net.non_depot_arcs()) <= n * n


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.integers(0, 5000), st.sampled_from(["rf", "ff", "erf", "mf"]))
def test_arcs_preserve_load(n, seed, kind):
    inst = tighten_time_windows(random_instance(n, seed, L=3))
    net = build_network(generate(kind, inst), inst)
    for a in net.node_arcs:
        assert a.tail.loadset == a.head.loadset
        if a.tail == net.source:
            assert a.head.loadset == frozenset() and 1 <= a.head.loc <= n
        if a.head == net.sink:
            assert a.tail.loadset == frozenset()


def test_decomposition_example():
    # (p2, p1, d2) + (p4, d4) + (p3, d1, d3), n = 4
    n = 4
    inst = line_instance([(0, 0)] + [(i, 0) for i in range(1, 9)], {i: (0, 1000) for i in range(1, 9)}, L=4, Q=4,
                         ride=1000)
    pieces = [((2, 1, 6), LoadNode(2), LoadNode(6, frozenset({1}))),
              ((4, 8), LoadNode(4, frozenset({1})), LoadNode(8, frozenset({1}))),
              ((3, 5, 7), LoadNode(3, frozenset({1})), LoadNode(7))]
    chain = []
    prev = None
    for path, s, e in pieces:
        if prev is not None:
            chain.append(NodeArc(prev, s))
        chain.append(make_fragment(inst, s, e, path, RF))
        prev = e
    assert route_from_chain(chain) == (2, 1, 6, 4, 8, 3, 5, 7)
    assert route_from_chain(chain[:1]) == (2, 1, 6)


def test_mismatched_junction():
    inst = random_instance(3, 1)
    f = make_fragment(inst, LoadNode(1), LoadNode(4), (1, 4), RF)
    g = make_fragment(inst, LoadNode(2, frozenset({3})), LoadNode(5, frozenset({3})), (2, 5), RF)
    with pytest.raises(ChainError):
        route_from_chain([f, NodeArc(LoadNode(4), LoadNode(2)), g])


def test_no_cross_load_arcs():
    inst = tighten_time_windows(random_instance(6, 9, L=4))
    net = build_network(generate("rf", inst), inst)
    assert not [a for a in net.node_arcs if a.tail.loadset != a.head.loadset]


def test_single_network_for_darp():
    inst = tighten_time_windows(random_instance(5, 3))
    _, nets = fragment_networks(inst, "rf")
    assert len(nets) == 1


def test_vehicle_networks_for_own_depots():
    inst = tighten_time_windows(random_instance(5, 3, multi_depot=3))
    _, nets = fragment_networks(inst, "rf")
    assert len(nets) == 3
    base = build_network(generate("rf", inst.vehicle_view(0)), inst.vehicle_view(0))
    assert len(attach_vehicle_copies(base, inst)) == 3


def test_vehicle_specific_pruning():
    # vehicle 1 starts so far away that it can never reach customer 1 in time
    inst = random_instance(2, 4, multi_depot=2, horizon=240)
    locs = list(inst.locations)
    from dataclasses import replace
    from darplpt.instance import euclidean_matrix
    o1 = inst.vehicle_depots[1][0]
    locs[o1] = replace(locs[o1], x=500.0, y=500.0)
    locs[1] = replace(locs[1], e=0.0, l=60.0)
    dist = euclidean_matrix(locs)
    inst = replace(inst, locations=tuple(locs), travel_time=dist, travel_cost=dist.copy())
    _, nets = fragment_networks(inst, "rf")
    served = [{i for f in net.fragments for i in f.served} for net in nets]
    assert 1 in served[0] and 1 not in served[1]


def test_edge_list_lines():
    inst = tighten_time_windows(random_instance(4, 2))
    net = build_network(generate("rf", inst), inst)
    lines = net.edge_list().splitlines()
    assert len(lines) == 1 + len(net.fragments) + len(net.node_arcs)
    assert sum(l.startswith("F ") for l in lines) == len(net.fragments)


def test_deterministic():
    inst = tighten_time_windows(random_instance(6, 5))
    a = build_network(generate("erf", inst), inst).edge_list()
    b = build_network(generate("erf", inst), inst).edge_list()
    assert a == b

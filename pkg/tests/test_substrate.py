from decimal import Decimal
from itertools import islice

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import line_net, make_request
from vecintent.lam import Mapping
from vecintent.substrate import (
    InsufficientResourcesError,
    ReservationError,
    SubstrateNetwork,
    TopologyError,
    UnknownNodeError,
    weighted_avg_neighbor_degree,
)


def triangle():
    net = SubstrateNetwork()
    for n in ("n1", "n2", "n3"):
        net.add_node(n, 4, 4)
    net.add_link("n1", "n2", 10, 1)
    net.add_link("n2", "n3", 10, 1)
    net.add_link("n1", "n3", 10, 1)
    return net


def test_k_shortest_line_has_one_path():
    net = line_net(3)
    paths = net.k_shortest_paths("n1", "n3", k=2, weight="hops")
    assert [p.nodes for p in paths] == [("n1", "n2", "n3")]


def test_k_shortest_triangle():
    paths = triangle().k_shortest_paths("n1", "n2", k=2)
    assert [p.nodes for p in paths] == [("n1", "n2"), ("n1", "n3", "n2")]
    assert [p.total_delay for p in paths] == [1, 2]


def test_k_shortest_rejects_same_endpoint_and_unknown():
    net = triangle()
    with pytest.raises(ValueError):
        net.k_shortest_paths("n1", "n1")
    with pytest.raises(UnknownNodeError):
        net.k_shortest_paths("n1", "zz")


def test_no_path_is_empty_list():
    net = line_net(2)
    net.add_node("x", 1, 1)
    assert net.k_shortest_paths("n1", "x") == []


def test_neighborhood_examples(line5):
    assert line5.neighborhood("n1", 2) == {"n1", "n2", "n3"}
    assert line5.neighborhood("n3", 0) == {"n3"}
    assert line5.neighborhood("n5", 2) == {"n3", "n4", "n5"}


def test_knn_path_graph():
    adj = {"a": {"b": Decimal(2)}, "b": {"a": Decimal(2), "c": Decimal(4)}, "c": {"b": Decimal(4)}, "z": {}}
    assert weighted_avg_neighbor_degree(adj, "b") == 1.0
    assert weighted_avg_neighbor_degree(adj, "a") == 2.0
    assert weighted_avg_neighbor_degree(adj, "z") == 0


def _mapping(net, request, placement, paths=None):
    m = Mapping(request.id)
    for vid, s in placement.items():
        m.place(request.nodes[vid], s)
    for link in request.links:
        m.route(link, net.make_path(paths[link.id]))
    return m


def test_reserve_rejects_without_mutation():
    net = line_net(2, cpu=1)
    req = make_request("i/r0", [("v", 2, 1)], [])
    before = net.free_state()
    with pytest.raises(InsufficientResourcesError):
        net.reserve(_mapping(net, req, {"v": "n1"}))
    assert net.free_state() == before


def test_colocation_accounting_and_round_trip():
    net = line_net(3)
    req = make_request("i/r0", [("a", 2, 1), ("b", 2, 1), ("c", 1, 1)], [("a", "b", 5, 10), ("b", "c", 5, 10)])
    before = net.free_state()
    m = _mapping(net, req, {"a": "n1", "b": "n1", "c": "n3"}, {"a-b": ["n1"], "b-c": ["n1", "n2", "n3"]})
    net.reserve(m)
    assert net.nodes["n1"].cpu_free == 6
    assert net.link("n1", "n2").bandwidth_free == 95
    net.release(m)
    assert net.free_state() == before
    with pytest.raises(ReservationError):
        net.release(m)


def test_vehicles_never_relay():
    net = line_net(2)
    net.add_user("u", 1, 1, "n1", 50, 1)
    net.add_link("u", "n2", 50, Decimal("0.1"))  # shortcut through the vehicle
    paths = net.k_shortest_paths("n1", "n2", k=5)
    assert [p.nodes for p in paths] == [("n1", "n2")]


def test_move_user_breaks_old_paths():
    net = line_net(3)
    net.add_user("u", 1, 1, "n1", 50, 1)
    p = net.make_path(["u", "n1", "n2"])
    net.move_user("u", "n3", 50, 1)
    assert not net.path_is_valid(p)
    assert net.node("u").attachment == "n3"


def test_topology_errors():
    net = line_net(2)
    with pytest.raises(TopologyError):
        net.add_link("n1", "n1", 1, 1)
    with pytest.raises(TopologyError):
        net.add_link("n1", "n2", 1, 1)
    with pytest.raises(TopologyError):
        net.add_node("n1", 1, 1)
    with pytest.raises(TopologyError):
        SubstrateNetwork.from_dict({"nodes": [{"id": "a", "cpu": 1, "ram": 1}, {"id": "b", "cpu": 1, "ram": 1}], "links": []})


def test_dict_round_trip():
    net = triangle()
    net.origin = (31.2, 121.4)
    again = SubstrateNetwork.from_dict(net.to_dict())
    assert again.to_dict() == net.to_dict()


@st.composite
def graphs(draw):
    n = draw(st.integers(3, 7))
    g = SubstrateNetwork()
    for i in range(n):
        g.add_node(f"s{i}", 10, 10)
    for i in range(1, n):  # spanning tree first
        g.add_link(f"s{i}", f"s{draw(st.integers(0, i - 1))}", draw(st.integers(1, 20)), draw(st.integers(1, 9)))
    for a in range(n):
        for b in range(a + 1, n):
            if not g.has_link(f"s{a}", f"s{b}") and draw(st.booleans()):
                g.add_link(f"s{a}", f"s{b}", draw(st.integers(1, 20)), draw(st.integers(1, 9)))
    return g


def _nx(g: SubstrateNetwork) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(g.nodes)
    for l in g.links:
        G.add_edge(l.a, l.b, delay=int(l.delay))
    return G


@settings(max_examples=60, deadline=None)
@given(graphs(), st.integers(1, 6))
def test_k_shortest_matches_networkx(g, k):
    G = _nx(g)
    ours = g.k_shortest_paths("s0", "s1", k=k)
    ref = list(islice(nx.shortest_simple_paths(G, "s0", "s1", weight="delay"), k))
    ref_costs = [nx.path_weight(G, p, "delay") for p in ref]
    assert [int(p.total_delay) for p in ours] == ref_costs
    assert len({p.nodes for p in ours}) == len(ours)
    for p in ours:
        assert p.nodes[0] == "s0" and p.nodes[-1] == "s1"
        assert len(set(p.nodes)) == len(p.nodes)
    # equal-cost ties are broken by node sequence
    for a, b in zip(ours, ours[1:]):
        assert (a.total_delay, a.nodes) < (b.total_delay, b.nodes)


@settings(max_examples=40, deadline=None)
@given(graphs())
def test_backbone_hops_match_networkx(g):
    ids, hops = g.backbone_hops()
    lengths = dict(nx.all_pairs_shortest_path_length(_nx(g)))
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            assert hops[i, j] == lengths[a][b]
    for a in ids:
        for depth in range(4):
            assert g.neighborhood(a, depth) == {b for b in ids if lengths[a][b] <= depth}


@settings(max_examples=40, deadline=None)
@given(graphs(), st.lists(st.tuples(st.integers(0, 6), st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=6))
def test_reserve_release_restores_exactly(g, demands):
    before = g.free_state()
    held = []
    for i, (node, cpu, ram) in enumerate(demands):
        sid = f"s{node % len(g.nodes)}"
        req = make_request(f"i{i}/r0", [("v", cpu, ram)], [])
        m = _mapping(g, req, {"v": sid})
        if g.can_reserve(m):
            g.reserve(m)
            held.append(m)
        assert not g.conservation_breaches()
    for m in reversed(held):
        g.release(m)
    assert g.free_state() == before

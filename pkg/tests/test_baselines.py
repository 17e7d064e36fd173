from decimal import Decimal
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_request
from oracles import mapping_feasible, random_instance, to_nx
from vecintent.baselines import DAMPING, embed_vnr, rank
from vecintent.lam import map_request
from vecintent.substrate import SubstrateNetwork


def path_abc():
    net = SubstrateNetwork()
    for n in ("a", "b", "c"):
        net.add_node(n, 1, 1)
    net.add_link("a", "b", 2, 1)
    net.add_link("b", "c", 4, 1)
    return net


def test_nrm_path_graph_golden():
    r = rank("nrm", path_abc())
    assert r.scores == {"a": Fraction(1, 6), "b": Fraction(1, 2), "c": Fraction(1, 3)}
    assert r.order() == ["b", "c", "a"]


@st.composite
def weighted_graphs(draw):
    n = draw(st.integers(2, 8))
    net = SubstrateNetwork()
    for i in range(n):
        net.add_node(f"s{i}", draw(st.integers(1, 40)), 10)
    for i in range(1, n):
        net.add_link(f"s{i}", f"s{draw(st.integers(0, i - 1))}", draw(st.integers(1, 50)), 1)
    for a in range(n):
        for b in range(a + 1, n):
            if not net.has_link(f"s{a}", f"s{b}") and draw(st.booleans()):
                net.add_link(f"s{a}", f"s{b}", draw(st.integers(1, 50)), 1)
    return net


@settings(max_examples=50, deadline=None)
@given(weighted_graphs(), st.sampled_from(["grc", "rw"]))
def test_walk_rankings_match_networkx_pagerank(net, algo):
    G = nx.Graph()
    for l in net.links:
        G.add_edge(l.a, l.b, bw=float(l.bandwidth_free))
    strength = dict(G.degree(weight="bw"))
    if algo == "grc":
        pers = {n: float(net.nodes[n].cpu_free) for n in G}
    else:
        pers = {n: float(net.nodes[n].cpu_free) * strength[n] for n in G}
    ref = nx.pagerank(G, alpha=DAMPING, personalization=pers, weight="bw", tol=1e-12, max_iter=1000)
    ours = rank(algo, net).scores
    for n in G:
        assert ours[n] == pytest.approx(ref[n], abs=1e-5)


def test_rw_uniform_on_symmetric_graph():
    net = SubstrateNetwork()
    for i in range(4):
        net.add_node(f"s{i}", 5, 5)
    for i in range(4):
        net.add_link(f"s{i}", f"s{(i + 1) % 4}", 10, 1)
    scores = rank("rw", net).scores
    assert all(v == pytest.approx(0.25) for v in scores.values())


def test_rank_rejects_unknown():
    with pytest.raises(ValueError):
        rank("pagerank", path_abc())


def test_distinct_nodes_unlike_lam():
    net = SubstrateNetwork()
    net.add_node("only", 10, 10)
    req = make_request("i/r0", [("a", 1, 1), ("b", 1, 1)], [("a", "b", 1, 10)])
    assert embed_vnr(req, rank("grc", net), net, commit=False) is None
    assert map_request(req, net, commit=False) is not None


def test_top_two_ranked_selected():
    net = SubstrateNetwork()
    for n, cpu in (("a", 10), ("b", 30), ("c", 20), ("d", 5)):
        net.add_node(n, cpu, 50)
    for a, b in (("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")):
        net.add_link(a, b, 100, 1)
    ranking = rank("nrm", net)
    req = make_request("i/r0", [("x", 1, 1), ("y", 1, 1)], [("x", "y", 1, 10)])
    m = embed_vnr(req, ranking, net)
    assert set(m.node_map.values()) == set(ranking.order()[:2])
    assert net.is_reserved(m)


@pytest.mark.parametrize("algo", ["grc", "rw", "nrm"])
def test_baseline_successes_are_feasible(algo):
    rng = np.random.default_rng(11)
    for _ in range(60):
        net, req = random_instance(rng)
        G = to_nx(net)
        m = embed_vnr(req, rank(algo, net), net, commit=False)
        if m is not None:
            assert len(set(m.node_map.values())) == len(m.node_map)
            assert mapping_feasible(G, req, m.node_map, {k: list(p.nodes) for k, p in m.link_map.items()})

"""Independent reference implementations used only by the tests.

The brute-force embedder enumerates every node assignment and every
combination of loop-free paths (networkx, vehicles as endpoints only), so it
shares no code with the library's embedders.
"""

from __future__ import annotations

from decimal import Decimal
from itertools import product

import networkx as nx
import numpy as np

from vecintent.intents import Request
from vecintent.substrate import NodeKind, SubstrateNetwork


def to_nx(net: SubstrateNetwork) -> nx.Graph:
    G = nx.Graph()
    for n, v in net.nodes.items():
        G.add_node(n, cpu=v.cpu_free, ram=v.ram_free, mobile=v.kind is NodeKind.MOBILE_USER)
    for l in net.links:
        G.add_edge(l.a, l.b, bw=l.bandwidth_free, delay=l.delay)
    return G


def _simple_paths(G: nx.Graph, a: str, b: str) -> list[list[str]]:
    if a == b:
        return [[a]]
    out = []
    for p in nx.all_simple_paths(G, a, b):
        if any(G.nodes[m]["mobile"] for m in p[1:-1]):
            continue
        out.append(p)
    return out


def mapping_feasible(G: nx.Graph, request: Request, placement: dict[str, str], paths: dict[str, list[str]]) -> bool:
    """Check one complete embedding against free resources in ``G``."""
    need: dict[str, list[Decimal]] = {}
    for vid, v in request.nodes.items():
        s = placement[vid]
        if v.pin is not None and v.pin.node != s:
            return False
        u = need.setdefault(s, [Decimal(0), Decimal(0)])
        u[0] += v.cpu
        u[1] += v.ram
    for s, (c, r) in need.items():
        if G.nodes[s]["cpu"] < c or G.nodes[s]["ram"] < r:
            return False
    bw: dict[frozenset, Decimal] = {}
    for link in request.links:
        p = paths[link.id]
        if {p[0], p[-1]} != {placement[link.a], placement[link.b]} or len(set(p)) != len(p):
            return False
        if any(G.nodes[m]["mobile"] for m in p[1:-1]):
            return False
        delay = Decimal(0)
        for x, y in zip(p, p[1:]):
            if not G.has_edge(x, y):
                return False
            delay += G.edges[x, y]["delay"]
            key = frozenset((x, y))
            bw[key] = bw.get(key, Decimal(0)) + link.bw
        if delay > link.delay:
            return False
    return all(G.edges[tuple(k)]["bw"] >= v for k, v in bw.items())


def brute_force_embed(net: SubstrateNetwork, request: Request, *, distinct: bool = False):
    """First feasible (placement, paths) found by exhaustive search, else ``None``."""
    G = to_nx(net)
    hosts = sorted(n for n in G if not G.nodes[n]["mobile"])
    vids = list(request.nodes)
    choices = []
    for vid in vids:
        v = request.nodes[vid]
        choices.append([v.pin.node] if v.pin is not None and v.pin.node in G else ([] if v.pin else hosts))
    for combo in product(*choices):
        if distinct and len(set(combo)) != len(combo):
            continue
        placement = dict(zip(vids, combo))
        options = [_simple_paths(G, placement[l.a], placement[l.b]) for l in request.links]
        for chosen in product(*options):
            paths = {l.id: p for l, p in zip(request.links, chosen)}
            if mapping_feasible(G, request, placement, paths):
                return placement, paths
    return None


def random_instance(rng: np.random.Generator):
    """Tiny connected substrate (3-6 servers) and a 1-3 node request."""
    from conftest import make_request

    n = int(rng.integers(3, 7))
    net = SubstrateNetwork()
    for i in range(n):
        net.add_node(f"s{i}", int(rng.integers(1, 6)), int(rng.integers(1, 6)))
    for i in range(1, n):
        net.add_link(f"s{i}", f"s{int(rng.integers(i))}", int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    for a in range(n):
        for b in range(a + 1, n):
            if not net.has_link(f"s{a}", f"s{b}") and rng.random() < 0.3:
                net.add_link(f"s{a}", f"s{b}", int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    m = int(rng.integers(1, 4))
    nodes = [(f"v{j}", int(rng.integers(1, 4)), int(rng.integers(1, 4))) for j in range(m)]
    links = []
    for j in range(1, m):
        links.append((f"v{int(rng.integers(j))}", f"v{j}", int(rng.integers(1, 4)), int(rng.integers(3, 25))))
    if m == 3 and rng.random() < 0.5 and not any({a, b} == {"v0", "v2"} for a, b, *_ in links):
        links.append(("v0", "v2", int(rng.integers(1, 4)), int(rng.integers(3, 25))))
    if rng.random() < 0.2:
        pin = f"s{int(rng.integers(n))}"
        nodes[0] = (*nodes[0], pin)
    return net, make_request("t/r0", nodes, links)

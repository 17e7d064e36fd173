"""Location-aware mapping of a single request onto the substrate.

Pinned virtual nodes are placed first, the remaining ones are visited breadth
first from the lowest-scoring virtual node. Each node first tries substrate
nodes already used by the request (co-location keeps links empty), then the
candidates within the delay-derived search range around its mapped
neighbours, best substrate score first.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Iterable

import numpy as np

from vecintent.intents import Request, RequestStatus, VirtualLink, VirtualNode
from vecintent.substrate import (
    NodeKind,
    SubstrateNetwork,
    SubstratePath,
    to_decimal,
    weighted_avg_neighbor_degree,
)

__all__ = [
    "Mapping",
    "LamConfig",
    "virtual_knn",
    "weighted_score",
    "virtual_node_score",
    "resource_weights",
    "substrate_node_score",
    "search_depth",
    "candidate_set",
    "map_node",
    "map_request",
]

_ZERO = Decimal(0)


@dataclass(eq=False)
class Mapping:
    """Node and link assignment of one request plus the resources it claims."""

    request_id: str
    node_map: dict[str, str] = field(default_factory=dict)
    link_map: dict[str, SubstratePath] = field(default_factory=dict)
    node_usage: dict[str, tuple[Decimal, Decimal]] = field(default_factory=dict)
    link_usage: dict[int, Decimal] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    token: int | None = None

    def place(self, vnode: VirtualNode, snode: str) -> None:
        self.node_map[vnode.id] = snode
        cpu, ram = self.node_usage.get(snode, (_ZERO, _ZERO))
        self.node_usage[snode] = (cpu + vnode.cpu, ram + vnode.ram)
        self.order.append(vnode.id)

    def route(self, vlink: VirtualLink, path: SubstratePath) -> None:
        self.link_map[vlink.id] = path
        for uid in path.links:
            self.link_usage[uid] = self.link_usage.get(uid, _ZERO) + vlink.bw

    def used(self, snode: str) -> tuple[Decimal, Decimal]:
        return self.node_usage.get(snode, (_ZERO, _ZERO))

    def selected_nodes(self) -> list[str]:
        """Distinct substrate nodes in order of first use."""
        return list(dict.fromkeys(self.node_map[v] for v in self.order))

    def to_dump(self) -> dict[str, Any]:
        return {
            "request": self.request_id,
            "nodes": dict(self.node_map),
            "links": {k: list(p.nodes) for k, p in self.link_map.items()},
            "delays": {k: p.total_delay for k, p in self.link_map.items()},
        }

    @classmethod
    def rebuild(
        cls,
        request: Request,
        net: SubstrateNetwork,
        node_map: dict[str, str],
        paths: dict[str, SubstratePath],
    ) -> "Mapping":
        m = cls(request.id)
        for vid in node_map:
            m.place(request.nodes[vid], node_map[vid])
        for link in request.links:
            m.route(link, paths[link.id])
        return m


@dataclass
class LamConfig:
    d: int = 2
    mu: Decimal = Decimal(10)
    k: int = 5


# ------------------------------------------------------------------- scoring
def virtual_knn(request: Request, v: str) -> float:
    """Bandwidth-weighted average neighbour degree inside the request graph."""
    return weighted_avg_neighbor_degree(request.bandwidth_adjacency(), v)


def weighted_score(cpu: float, ram: float, alpha: float, knn: float) -> float:
    """``(alpha*cpu + (1-alpha)*ram) * knn``, the shared form of both node scores."""
    return (alpha * cpu + (1.0 - alpha) * ram) * knn


def virtual_node_score(
    v: VirtualNode,
    request: Request,
    cpu_max: Any = 1,
    ram_max: Any = 1,
    adjacency: dict | None = None,
) -> float:
    """Score of a virtual node: normalised demands weighted by its own cpu:ram ratio."""
    alpha = float(v.cpu / (v.cpu + v.ram))
    knn = weighted_avg_neighbor_degree(adjacency or request.bandwidth_adjacency(), v.id)
    return weighted_score(float(v.cpu / to_decimal(cpu_max)), float(v.ram / to_decimal(ram_max)), alpha, knn)


def resource_weights(cpu_sum: Any, ram_sum: Any) -> tuple[float, float]:
    """(alpha, beta) with alpha/beta = cpu_sum/ram_sum and alpha+beta = 1."""
    cpu_sum, ram_sum = to_decimal(cpu_sum), to_decimal(ram_sum)
    total = cpu_sum + ram_sum
    if total == 0:
        return 0.5, 0.5
    alpha = float(cpu_sum / total)
    return alpha, 1.0 - alpha


def substrate_node_score(
    net: SubstrateNetwork,
    n: str,
    depth: int,
    normalize: bool = True,
    adjacency: dict | None = None,
    maxima: tuple[Decimal, Decimal] | None = None,
) -> float:
    """Score of a substrate node from its free resources and position.

    The cpu/ram weights come from the free resources of the edge servers
    within ``depth`` hops; the free resources of ``n`` itself are divided by
    the largest server capacities when ``normalize`` is set.
    """
    node = net.node(n)
    cpu_sum = ram_sum = _ZERO
    for m in net.neighborhood(n, depth):
        other = net.nodes[m]
        if other.kind is NodeKind.EDGE_SERVER:
            cpu_sum += other.cpu_free
            ram_sum += other.ram_free
    alpha, _ = resource_weights(cpu_sum, ram_sum)
    if adjacency is None:
        adjacency = net.bandwidth_adjacency(backbone=True)
    knn = weighted_avg_neighbor_degree(adjacency, n) if n in adjacency else 0.0
    cpu, ram = node.cpu_free, node.ram_free
    if normalize:
        cpu_max, ram_max = maxima or net.capacity_maxima()
        return weighted_score(float(cpu / cpu_max), float(ram / ram_max), alpha, knn)
    return weighted_score(float(cpu), float(ram), alpha, knn)


def search_depth(delay_budget: Any, mu: Any = 10, d: int = 2) -> int:
    """Hop radius ``d * ceil(delay_budget / mu)``."""
    delay_budget, mu = to_decimal(delay_budget), to_decimal(mu)
    if delay_budget <= 0 or mu <= 0 or d <= 0:
        raise ValueError("search depth arguments must be positive")
    return d * math.ceil(delay_budget / mu)


# ------------------------------------------------------------------- mapping
class _Context:
    """Per-request caches; the substrate does not change until commit.

    Scores of all edge servers are computed at once per search depth from
    the cached backbone hop matrix; they equal :func:`substrate_node_score`.
    """

    def __init__(self, net: SubstrateNetwork, request: Request, cfg: LamConfig) -> None:
        self.net = net
        self.request = request
        self.cfg = cfg
        self._hoods: dict[tuple[str, int], set[str]] = {}
        self._vectors: dict[int, np.ndarray] = {}
        self.maxima = net.capacity_maxima()
        self.servers, self.hops = net.backbone_hops()
        self.index = {n: i for i, n in enumerate(self.servers)}
        nodes = net.nodes
        self.cpu = np.array([float(nodes[n].cpu_free) for n in self.servers])
        self.ram = np.array([float(nodes[n].ram_free) for n in self.servers])
        size = len(self.servers)
        bw = np.zeros((size, size))
        deg = np.zeros(size)
        for link in net.links:
            i, j = self.index.get(link.a), self.index.get(link.b)
            if i is None or j is None:
                continue
            bw[i, j] = bw[j, i] = float(link.bandwidth_free)
            deg[i] += 1
            deg[j] += 1
        strength = bw.sum(axis=1)
        self.knn = np.divide(bw @ deg, strength, out=np.zeros(size), where=strength > 0)

    def depth(self, link: VirtualLink) -> int:
        return search_depth(link.delay, self.cfg.mu, self.cfg.d)

    def hood(self, center: str, depth: int) -> set[str]:
        key = (center, depth)
        if key not in self._hoods:
            self._hoods[key] = self.net.neighborhood(center, depth)
        return self._hoods[key]

    def vector(self, depth: int) -> np.ndarray:
        if depth not in self._vectors:
            within = (self.hops <= depth).astype(float)
            cs, rs = within @ self.cpu, within @ self.ram
            total = cs + rs
            alpha = np.divide(cs, total, out=np.full(len(total), 0.5), where=total > 0)
            cpu_max, ram_max = (float(m) for m in self.maxima)
            self._vectors[depth] = (alpha * self.cpu / cpu_max + (1.0 - alpha) * self.ram / ram_max) * self.knn
        return self._vectors[depth]

    def score(self, n: str, depth: int) -> float:
        return float(self.vector(depth)[self.index[n]])


def candidate_set(
    u: VirtualNode,
    partial: Mapping,
    request: Request,
    net: SubstrateNetwork,
    cfg: LamConfig | None = None,
    _ctx: _Context | None = None,
) -> list[str]:
    """Edge servers within search range of every mapped neighbour of ``u``.

    Each mapped neighbour ``v`` contributes the nodes within
    ``search_depth(delay(u, v))`` hops of its image; the sets are
    intersected. With no mapped neighbour every edge server qualifies. The
    result is ordered by substrate score (descending), ties by node id.
    """
    ctx = _ctx or _Context(net, request, cfg or LamConfig())
    if u.id in partial.node_map:
        raise ValueError(f"{u.id} is already mapped")
    pool: set[str] | None = None
    depths = []
    for link in request.incident(u.id):
        v = link.other(u.id)
        if v not in partial.node_map:
            continue
        depth = ctx.depth(link)
        depths.append(depth)
        hood = ctx.hood(partial.node_map[v], depth)
        pool = set(hood) if pool is None else pool & hood
    if pool is None:
        servers = ctx.servers
        incident = request.incident(u.id)
        depth = min((ctx.depth(l) for l in incident), default=ctx.cfg.d)
    else:
        servers = [n for n in pool if net.nodes[n].kind is NodeKind.EDGE_SERVER]
        depth = min(depths)
    return sorted(servers, key=lambda n: (-ctx.score(n, depth), n))


def _fits(net: SubstrateNetwork, snode: str, u: VirtualNode, partial: Mapping) -> bool:
    node = net.nodes[snode]
    cpu, ram = partial.used(snode)
    return node.cpu_free - cpu >= u.cpu and node.ram_free - ram >= u.ram


def _route_links(
    net: SubstrateNetwork,
    u: VirtualNode,
    snode: str,
    partial: Mapping,
    request: Request,
    k: int,
) -> list[tuple[VirtualLink, SubstratePath]] | None:
    """Paths for every link between ``u`` (placed on ``snode``) and mapped nodes."""
    routed: list[tuple[VirtualLink, SubstratePath]] = []
    used = dict(partial.link_usage)
    for link in request.incident(u.id):
        v = link.other(u.id)
        if v not in partial.node_map:
            continue
        ends = {u.id: snode, v: partial.node_map[v]}
        src, dst = ends[link.a], ends[link.b]
        path = net.first_feasible_path(src, dst, link.bw, link.delay, k, used)
        if path is None:
            return None
        for uid in path.links:
            used[uid] = used.get(uid, _ZERO) + link.bw
        routed.append((link, path))
    return routed


def map_node(
    u: VirtualNode,
    candidates: Iterable[str],
    partial: Mapping,
    request: Request,
    net: SubstrateNetwork,
    k: int = 5,
) -> bool:
    """Place ``u`` on the first candidate meeting node and link demands.

    On success ``partial`` gains the placement and the routed links.
    """
    if u.id in partial.node_map:
        raise ValueError(f"{u.id} is already mapped")
    for snode in candidates:
        if not _fits(net, snode, u, partial):
            continue
        routed = _route_links(net, u, snode, partial, request, k)
        if routed is None:
            continue
        partial.place(u, snode)
        for link, path in routed:
            partial.route(link, path)
        return True
    return False


def _pin_target(v: VirtualNode, net: SubstrateNetwork) -> str | None:
    assert v.pin is not None
    return v.pin.node if v.pin.node in net.nodes else None


def map_request(
    request: Request,
    net: SubstrateNetwork,
    d: int = 2,
    *,
    k: int = 5,
    mu: Any = 10,
    commit: bool = True,
    cpu_max: Any = None,
    ram_max: Any = None,
) -> Mapping | None:
    """Embed ``request``; reserve and return the mapping, or ``None`` on failure.

    A failed attempt leaves the substrate untouched and marks the request
    failed; a successful one marks it installed (when ``commit`` is set).
    """
    cfg = LamConfig(d=d, mu=to_decimal(mu), k=k)
    ctx = _Context(net, request, cfg)
    partial = Mapping(request.id)

    def fail() -> None:
        if commit:
            request.status = RequestStatus.FAILED

    # pinned nodes go exactly where they are told
    for v in request.pinned:
        target = _pin_target(v, net)
        if target is None or not map_node(v, [target], partial, request, net, k):
            return fail()

    unpinned = [v for v in request.nodes.values() if v.pin is None]
    if unpinned:
        if cpu_max is None or ram_max is None:
            cpu_max, ram_max = ctx.maxima
        adjacency = request.bandwidth_adjacency()
        scores = {v.id: virtual_node_score(v, request, cpu_max, ram_max, adjacency) for v in unpinned}
        order = sorted(unpinned, key=lambda v: (scores[v.id], v.id))
        queued: set[str] = set()
        queue: deque[VirtualNode] = deque()
        while True:
            if not queue:
                rest = [v for v in order if v.id not in partial.node_map and v.id not in queued]
                if not rest:
                    break
                queue.append(rest[0])
                queued.add(rest[0].id)
            u = queue.popleft()
            used_nodes = partial.selected_nodes()
            if not map_node(u, used_nodes, partial, request, net, k):
                taken = set(used_nodes)
                fresh = [n for n in candidate_set(u, partial, request, net, cfg, ctx) if n not in taken]
                if not map_node(u, fresh, partial, request, net, k):
                    return fail()
            nxt = [
                request.nodes[w]
                for w in dict.fromkeys(request.neighbors(u.id))
                if w not in partial.node_map and w not in queued and request.nodes[w].pin is None
            ]
            for w in sorted(nxt, key=lambda v: (scores[v.id], v.id)):
                queue.append(w)
                queued.add(w.id)

    if commit:
        if not net.can_reserve(partial):
            return fail()
        net.reserve(partial)
        request.status = RequestStatus.INSTALLED
    return partial

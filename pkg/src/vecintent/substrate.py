"""Physical edge network: nodes, links, residual resources and path queries.

Resource quantities are held as :class:`~decimal.Decimal` so that reserving and
releasing a mapping restores every free-resource field exactly.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from itertools import islice
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Iterator, Mapping

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from vecintent.lam import Mapping as EmbeddingMapping

__all__ = [
    "NodeKind",
    "SubstrateNode",
    "SubstrateLink",
    "SubstratePath",
    "SubstrateNetwork",
    "SubstrateError",
    "UnknownNodeError",
    "InsufficientResourcesError",
    "ReservationError",
    "TopologyError",
    "to_decimal",
    "weighted_avg_neighbor_degree",
]


class SubstrateError(Exception):
    """Base class for substrate failures."""


class UnknownNodeError(SubstrateError, KeyError):
    pass


class InsufficientResourcesError(SubstrateError):
    pass


class ReservationError(SubstrateError):
    pass


class TopologyError(SubstrateError, ValueError):
    """Topology data violates a structural invariant."""


def to_decimal(value: Any) -> Decimal:
    """Convert ints, floats, strings or Decimals to Decimal without binary noise."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a resource quantity")
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(str(value))


class NodeKind(str, Enum):
    EDGE_SERVER = "edge_server"
    MOBILE_USER = "mobile_user"


@dataclass
class SubstrateNode:
    id: str
    cpu_capacity: Decimal
    ram_capacity: Decimal
    cpu_free: Decimal
    ram_free: Decimal
    position: tuple[float, float] = (0.0, 0.0)
    kind: NodeKind = NodeKind.EDGE_SERVER
    attachment: str | None = None

    @property
    def is_mobile(self) -> bool:
        return self.kind is NodeKind.MOBILE_USER


@dataclass(eq=False)
class SubstrateLink:
    a: str
    b: str
    bandwidth_capacity: Decimal
    bandwidth_free: Decimal
    delay: Decimal
    uid: int = -1

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class SubstratePath:
    """Loop-free walk through the substrate, stored as node and link sequences.

    A single-node path (no links) stands for a virtual link whose endpoints
    share a substrate node; it has zero delay and no bandwidth bottleneck.
    """

    nodes: tuple[str, ...]
    links: tuple[int, ...]
    total_delay: Decimal
    bottleneck_bw: Decimal | None

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    @property
    def is_empty(self) -> bool:
        return not self.links

    @classmethod
    def trivial(cls, node: str) -> "SubstratePath":
        return cls((node,), (), Decimal(0), None)


def weighted_avg_neighbor_degree(
    adjacency: Mapping[str, Mapping[str, Any]], node: str
) -> float:
    """Bandwidth-weighted average neighbour degree ``(1/s_i) * sum(bw_ij * k_j)``.

    ``adjacency[i][j]`` is the bandwidth of link ``(i, j)``. Isolated nodes, and
    nodes whose incident bandwidth sums to zero, score 0.
    """
    nbrs = adjacency[node]
    strength = sum(nbrs.values(), Decimal(0))
    if not nbrs or strength == 0:
        return 0.0
    acc = sum((bw * len(adjacency[j]) for j, bw in nbrs.items()), Decimal(0))
    return float(acc / strength)


_WEIGHTS = ("delay", "hops")


class SubstrateNetwork:
    """Undirected simple graph of edge servers and mobile users."""

    def __init__(self) -> None:
        self.nodes: dict[str, SubstrateNode] = {}
        self._adj: dict[str, dict[str, SubstrateLink]] = {}
        self._links: dict[int, SubstrateLink] = {}
        self._next_uid = 0
        self._next_token = 1
        self._reservations: dict[int, tuple[dict, dict]] = {}
        self.version = 0
        self.origin: tuple[float, float] | None = None
        self._backbone_version = 0
        self._hop_cache: tuple[int, list[str], np.ndarray] | None = None

    # ------------------------------------------------------------------ build
    def add_node(
        self,
        node_id: str,
        cpu: Any,
        ram: Any,
        position: tuple[float, float] = (0.0, 0.0),
        kind: NodeKind | str = NodeKind.EDGE_SERVER,
    ) -> SubstrateNode:
        if node_id in self.nodes:
            raise TopologyError(f"duplicate node id {node_id!r}")
        cpu, ram = to_decimal(cpu), to_decimal(ram)
        if cpu < 0 or ram < 0:
            raise TopologyError(f"node {node_id!r} has negative capacity")
        node = SubstrateNode(
            node_id, cpu, ram, cpu, ram, (float(position[0]), float(position[1])), NodeKind(kind)
        )
        self.nodes[node_id] = node
        self._adj[node_id] = {}
        self.version += 1
        if node.kind is NodeKind.EDGE_SERVER:
            self._backbone_version += 1
        return node

    def add_link(self, a: str, b: str, bandwidth: Any, delay: Any) -> SubstrateLink:
        self._require(a)
        self._require(b)
        if a == b:
            raise TopologyError(f"self-loop on {a!r}")
        if b in self._adj[a]:
            raise TopologyError(f"duplicate link {a!r}-{b!r}")
        bandwidth, delay = to_decimal(bandwidth), to_decimal(delay)
        if bandwidth < 0:
            raise TopologyError(f"link {a!r}-{b!r} has negative bandwidth")
        if delay <= 0:
            raise TopologyError(f"link {a!r}-{b!r} must have positive delay")
        link = SubstrateLink(a, b, bandwidth, bandwidth, delay, self._next_uid)
        self._next_uid += 1
        self._adj[a][b] = link
        self._adj[b][a] = link
        self._links[link.uid] = link
        self.version += 1
        self._touch_backbone(a, b)
        return link

    def remove_link(self, a: str, b: str) -> SubstrateLink:
        link = self.link(a, b)
        del self._adj[a][b]
        del self._adj[b][a]
        del self._links[link.uid]
        self.version += 1
        self._touch_backbone(a, b)
        return link

    def _touch_backbone(self, a: str, b: str) -> None:
        if not (self.nodes[a].is_mobile or self.nodes[b].is_mobile):
            self._backbone_version += 1

    def remove_node(self, node_id: str) -> None:
        self._require(node_id)
        for nbr in list(self._adj[node_id]):
            self.remove_link(node_id, nbr)
        del self._adj[node_id]
        if not self.nodes.pop(node_id).is_mobile:
            self._backbone_version += 1
        self.version += 1

    def add_user(
        self,
        user_id: str,
        cpu: Any,
        ram: Any,
        server: str,
        bandwidth: Any,
        delay: Any,
        position: tuple[float, float] = (0.0, 0.0),
    ) -> SubstrateNode:
        """Add a mobile user node with one wireless link to ``server``."""
        if self.node(server).is_mobile:
            raise TopologyError("mobile users attach to edge servers only")
        node = self.add_node(user_id, cpu, ram, position, NodeKind.MOBILE_USER)
        self.add_link(user_id, server, bandwidth, delay)
        node.attachment = server
        return node

    def move_user(self, user_id: str, server: str, bandwidth: Any, delay: Any) -> SubstrateLink:
        """Replace the user's attachment link.

        Reservations held on the old wireless link vanish with it; mappings
        that routed over it are left with dangling link ids and are detected
        by :meth:`path_is_valid`.
        """
        node = self.node(user_id)
        if not node.is_mobile:
            raise TopologyError(f"{user_id!r} is not a mobile user")
        if node.attachment is not None and node.attachment in self._adj[user_id]:
            self.remove_link(user_id, node.attachment)
        link = self.add_link(user_id, server, bandwidth, delay)
        node.attachment = server
        return link

    # ---------------------------------------------------------------- queries
    def _require(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise UnknownNodeError(node_id)

    def node(self, node_id: str) -> SubstrateNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def link(self, a: str, b: str) -> SubstrateLink:
        self._require(a)
        self._require(b)
        try:
            return self._adj[a][b]
        except KeyError:
            raise SubstrateError(f"no link {a!r}-{b!r}") from None

    def has_link(self, a: str, b: str) -> bool:
        return a in self._adj and b in self._adj[a]

    def link_by_uid(self, uid: int) -> SubstrateLink | None:
        return self._links.get(uid)

    @property
    def links(self) -> list[SubstrateLink]:
        return list(self._links.values())

    def neighbors(self, node_id: str) -> list[str]:
        self._require(node_id)
        return list(self._adj[node_id])

    def degree(self, node_id: str) -> int:
        self._require(node_id)
        return len(self._adj[node_id])

    def edge_servers(self) -> list[str]:
        return sorted(n for n, v in self.nodes.items() if v.kind is NodeKind.EDGE_SERVER)

    def capacity_maxima(self) -> tuple[Decimal, Decimal]:
        """Largest CPU and RAM capacities among edge servers (normalisation basis)."""
        servers = [v for v in self.nodes.values() if v.kind is NodeKind.EDGE_SERVER]
        if not servers:
            servers = list(self.nodes.values())
        cpu = max((v.cpu_capacity for v in servers), default=Decimal(1))
        ram = max((v.ram_capacity for v in servers), default=Decimal(1))
        return cpu or Decimal(1), ram or Decimal(1)

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(self.nodes))
        return len(self.neighborhood(start, len(self.nodes))) == len(self.nodes)

    def neighborhood(self, center: str, depth: int) -> set[str]:
        """All nodes within ``depth`` hops of ``center``, including it."""
        self._require(center)
        if depth < 0:
            raise ValueError("depth must be non-negative")
        seen = {center}
        frontier = [center]
        for _ in range(depth):
            nxt = []
            for n in frontier:
                for m in self._adj[n]:
                    if m not in seen:
                        seen.add(m)
                        nxt.append(m)
            if not nxt:
                break
            frontier = nxt
        return seen

    def hop_distances(self, source: str) -> dict[str, int]:
        self._require(source)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            n = queue.popleft()
            for m in self._adj[n]:
                if m not in dist:
                    dist[m] = dist[n] + 1
                    queue.append(m)
        return dist

    def backbone_hops(self) -> tuple[list[str], np.ndarray]:
        """Sorted edge-server ids and their pairwise hop counts over server links.

        Unreachable pairs hold ``len(ids) + 1``. Vehicles hang off a single
        link, so they never shorten a server-to-server hop count. Cached until
        a server or server link changes.
        """
        if self._hop_cache is not None and self._hop_cache[0] == self._backbone_version:
            return self._hop_cache[1], self._hop_cache[2]
        ids = self.edge_servers()
        index = {n: i for i, n in enumerate(ids)}
        hops = np.full((len(ids), len(ids)), len(ids) + 1, dtype=np.int64)
        for i, src in enumerate(ids):
            hops[i, i] = 0
            queue = deque([src])
            while queue:
                n = queue.popleft()
                for m in self._adj[n]:
                    j = index.get(m)
                    if j is not None and hops[i, j] > len(ids):
                        hops[i, j] = hops[i, index[n]] + 1
                        queue.append(m)
        hops.setflags(write=False)
        self._hop_cache = (self._backbone_version, ids, hops)
        return ids, hops

    def bandwidth_adjacency(self, backbone: bool = False) -> dict[str, dict[str, Decimal]]:
        """Free-bandwidth adjacency, optionally restricted to edge servers."""
        if not backbone:
            return {n: {m: l.bandwidth_free for m, l in nbrs.items()} for n, nbrs in self._adj.items()}
        servers = {n for n, v in self.nodes.items() if v.kind is NodeKind.EDGE_SERVER}
        return {
            n: {m: l.bandwidth_free for m, l in self._adj[n].items() if m in servers}
            for n in servers
        }

    def avg_neighbor_degree_bw(self, node_id: str, backbone: bool = False) -> float:
        self._require(node_id)
        if not backbone:
            adj = {node_id: {m: l.bandwidth_free for m, l in self._adj[node_id].items()}}
            for m in self._adj[node_id]:
                adj[m] = self._adj[m]  # only len() is used for neighbours
            return weighted_avg_neighbor_degree(adj, node_id)
        if self.nodes[node_id].kind is not NodeKind.EDGE_SERVER:
            return 0.0
        adj = self.bandwidth_adjacency(backbone=True)
        return weighted_avg_neighbor_degree(adj, node_id)

    # ------------------------------------------------------------------ paths
    def make_path(self, nodes: Iterable[str]) -> SubstratePath:
        seq = tuple(nodes)
        if not seq:
            raise ValueError("empty node sequence")
        if len(set(seq)) != len(seq):
            raise ValueError(f"path {seq} repeats a node")
        links = [self.link(a, b) for a, b in zip(seq, seq[1:])]
        if not links:
            self._require(seq[0])
            return SubstratePath.trivial(seq[0])
        return SubstratePath(
            seq,
            tuple(l.uid for l in links),
            sum((l.delay for l in links), Decimal(0)),
            min(l.bandwidth_free for l in links),
        )

    def path_is_valid(self, path: SubstratePath) -> bool:
        """True while every link of ``path`` still exists between the same nodes."""
        if path.is_empty:
            return path.nodes[0] in self.nodes
        for (a, b), uid in zip(zip(path.nodes, path.nodes[1:]), path.links):
            link = self._links.get(uid)
            if link is None or link.endpoints != frozenset((a, b)):
                return False
        return True

    def _dijkstra(
        self,
        source: str,
        target: str,
        weight: str,
        banned_nodes: set[str],
        banned_links: set[int],
    ) -> tuple[Any, tuple[str, ...]] | None:
        # Heap entries compare by (cost, node sequence), which yields the
        # lexicographically smallest sequence among equal-cost shortest paths.
        heap: list[tuple[Any, tuple[str, ...]]] = [(0, (source,))]
        settled: set[str] = set()
        nodes = self.nodes
        use_delay = weight == "delay"
        while heap:
            cost, path = heapq.heappop(heap)
            here = path[-1]
            if here in settled:
                continue
            if here == target:
                return cost, path
            settled.add(here)
            for nbr, link in self._adj[here].items():
                if nbr in settled or nbr in banned_nodes or link.uid in banned_links:
                    continue
                # vehicles terminate traffic, they never relay it
                if nbr != target and nodes[nbr].kind is NodeKind.MOBILE_USER:
                    continue
                heapq.heappush(heap, (cost + (link.delay if use_delay else 1), path + (nbr,)))
        return None

    def iter_shortest_paths(self, u: str, v: str, weight: str = "delay") -> Iterator[SubstratePath]:
        """Yield loop-free ``u``-``v`` paths in nondecreasing weight (Yen).

        Equal-weight paths come out in lexicographic order of their node
        sequences, so the enumeration is fully deterministic.
        """
        self._require(u)
        self._require(v)
        if u == v:
            raise ValueError("source and target must differ")
        if weight not in _WEIGHTS:
            raise ValueError(f"weight must be one of {_WEIGHTS}")
        first = self._dijkstra(u, v, weight, set(), set())
        if first is None:
            return
        found: list[tuple[Any, tuple[str, ...]]] = [first]
        seen = {first[1]}
        candidates: list[tuple[Any, tuple[str, ...]]] = []
        yield self.make_path(first[1])
        while True:
            last = found[-1][1]
            root_cost: Any = 0
            for i in range(len(last) - 1):
                spur = last[i]
                root = last[: i + 1]
                banned_links = {
                    self._adj[p[i]][p[i + 1]].uid
                    for _, p in found
                    if len(p) > i + 1 and p[: i + 1] == root
                }
                res = self._dijkstra(spur, v, weight, set(root[:-1]), banned_links)
                if res is not None:
                    cand = root[:-1] + res[1]
                    if cand not in seen:
                        seen.add(cand)
                        heapq.heappush(candidates, (root_cost + res[0], cand))
                step = self._adj[last[i]][last[i + 1]]
                root_cost = root_cost + (step.delay if weight == "delay" else 1)
            if not candidates:
                return
            best = heapq.heappop(candidates)
            found.append(best)
            yield self.make_path(best[1])

    def k_shortest_paths(self, u: str, v: str, k: int = 5, weight: str = "delay") -> list[SubstratePath]:
        if k < 1:
            raise ValueError("k must be >= 1")
        return list(islice(self.iter_shortest_paths(u, v, weight), k))

    def first_feasible_path(
        self,
        u: str,
        v: str,
        bandwidth: Decimal,
        delay_budget: Decimal,
        k: int = 5,
        used: Mapping[int, Decimal] | None = None,
    ) -> SubstratePath | None:
        """First of the ``k`` delay-shortest paths meeting bandwidth and delay.

        ``used`` holds bandwidth already claimed per link uid by a mapping
        under construction. Same-node endpoints give the trivial path.
        """
        if u == v:
            self._require(u)
            return SubstratePath.trivial(u)
        used = used or {}
        for path in islice(self.iter_shortest_paths(u, v, "delay"), k):
            if path.total_delay > delay_budget:
                return None  # later paths are no shorter
            if all(self._links[uid].bandwidth_free - used.get(uid, 0) >= bandwidth for uid in path.links):
                return path
        return None

    # ------------------------------------------------------------ reservation
    def can_reserve(self, mapping: "EmbeddingMapping") -> bool:
        for node_id, (cpu, ram) in mapping.node_usage.items():
            node = self.nodes.get(node_id)
            if node is None or node.cpu_free < cpu or node.ram_free < ram:
                return False
        for uid, bw in mapping.link_usage.items():
            link = self._links.get(uid)
            if link is None or link.bandwidth_free < bw:
                return False
        return True

    def reserve(self, mapping: "EmbeddingMapping") -> int:
        """Deduct the mapping's demands atomically; returns a reservation token."""
        if getattr(mapping, "token", None) in self._reservations:
            raise ReservationError(f"mapping for {mapping.request_id} is already reserved")
        if not self.can_reserve(mapping):
            raise InsufficientResourcesError(f"insufficient resources for {mapping.request_id}")
        nodes = {n: (cpu, ram) for n, (cpu, ram) in mapping.node_usage.items()}
        links = dict(mapping.link_usage)
        for node_id, (cpu, ram) in nodes.items():
            node = self.nodes[node_id]
            node.cpu_free -= cpu
            node.ram_free -= ram
        for uid, bw in links.items():
            self._links[uid].bandwidth_free -= bw
        token = self._next_token
        self._next_token += 1
        self._reservations[token] = (nodes, links)
        mapping.token = token
        return token

    def release(self, mapping: "EmbeddingMapping") -> None:
        token = getattr(mapping, "token", None)
        if token not in self._reservations:
            raise ReservationError(f"mapping for {mapping.request_id} is not reserved")
        nodes, links = self._reservations.pop(token)
        for node_id, (cpu, ram) in nodes.items():
            node = self.nodes.get(node_id)
            if node is not None:
                node.cpu_free += cpu
                node.ram_free += ram
        for uid, bw in links.items():
            link = self._links.get(uid)
            if link is not None:  # wireless links may have been replaced
                link.bandwidth_free += bw
        mapping.token = None

    def is_reserved(self, mapping: "EmbeddingMapping") -> bool:
        return getattr(mapping, "token", None) in self._reservations

    def conservation_breaches(self) -> list[str]:
        """Fields where ``free + held != capacity`` or a bound is violated."""
        held_cpu: dict[str, Decimal] = {}
        held_ram: dict[str, Decimal] = {}
        held_bw: dict[int, Decimal] = {}
        for nodes, links in self._reservations.values():
            for n, (cpu, ram) in nodes.items():
                held_cpu[n] = held_cpu.get(n, Decimal(0)) + cpu
                held_ram[n] = held_ram.get(n, Decimal(0)) + ram
            for uid, bw in links.items():
                held_bw[uid] = held_bw.get(uid, Decimal(0)) + bw
        out = []
        for n, node in self.nodes.items():
            if node.cpu_free + held_cpu.get(n, 0) != node.cpu_capacity or node.cpu_free < 0:
                out.append(f"node {n} cpu")
            if node.ram_free + held_ram.get(n, 0) != node.ram_capacity or node.ram_free < 0:
                out.append(f"node {n} ram")
        for uid, link in self._links.items():
            if link.bandwidth_free + held_bw.get(uid, 0) != link.bandwidth_capacity or link.bandwidth_free < 0:
                out.append(f"link {link.a}-{link.b} bw")
        return out

    # ------------------------------------------------------------- snapshots
    def free_state(self) -> tuple:
        """Hashable snapshot of every free-resource field."""
        nodes = tuple(sorted((n, v.cpu_free, v.ram_free) for n, v in self.nodes.items()))
        links = tuple(sorted((l.uid, l.bandwidth_free) for l in self._links.values()))
        return nodes, links

    def copy(self) -> "SubstrateNetwork":
        other = SubstrateNetwork()
        other.origin = self.origin
        for n, v in self.nodes.items():
            other.nodes[n] = SubstrateNode(**{f: getattr(v, f) for f in v.__dataclass_fields__})
            other._adj[n] = {}
        for uid, l in self._links.items():
            dup = SubstrateLink(l.a, l.b, l.bandwidth_capacity, l.bandwidth_free, l.delay, uid)
            other._links[uid] = dup
            other._adj[l.a][l.b] = dup
            other._adj[l.b][l.a] = dup
        other._next_uid = self._next_uid
        other._reservations = {t: (dict(n), dict(l)) for t, (n, l) in self._reservations.items()}
        other._next_token = self._next_token
        other.version = self.version
        other._backbone_version = self._backbone_version
        other._hop_cache = self._hop_cache
        return other

    # ------------------------------------------------------------- file I/O
    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "nodes": [
                {
                    "id": v.id,
                    "cpu": v.cpu_capacity,
                    "ram": v.ram_capacity,
                    "x_km": v.position[0],
                    "y_km": v.position[1],
                    "kind": v.kind.value,
                }
                for v in self.nodes.values()
            ],
            "links": [
                {"a": l.a, "b": l.b, "bw_mbps": l.bandwidth_capacity, "delay_ms": l.delay}
                for l in self._links.values()
            ],
        }
        if self.origin is not None:
            out["origin"] = {"lat": self.origin[0], "lon": self.origin[1]}
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], require_connected: bool = True) -> "SubstrateNetwork":
        net = cls()
        try:
            for rec in data["nodes"]:
                net.add_node(
                    str(rec["id"]),
                    rec["cpu"],
                    rec["ram"],
                    (float(rec.get("x_km", 0.0)), float(rec.get("y_km", 0.0))),
                    rec.get("kind", NodeKind.EDGE_SERVER.value),
                )
            for rec in data["links"]:
                a, b = str(rec["a"]), str(rec["b"])
                net.add_link(a, b, rec["bw_mbps"], rec["delay_ms"])
                for end, other in ((a, b), (b, a)):
                    if net.nodes[end].is_mobile:
                        net.nodes[end].attachment = other
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TopologyError):
                raise
            raise TopologyError(f"malformed topology: {exc}") from exc
        if "origin" in data:
            net.origin = (float(data["origin"]["lat"]), float(data["origin"]["lon"]))
        if require_connected and not net.is_connected():
            raise TopologyError("topology is not connected")
        return net

    def save(self, path: str | Path) -> None:
        Path(path).write_text(dumps_json(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "SubstrateNetwork":
        return cls.from_dict(json.loads(Path(path).read_text(), parse_float=Decimal))


def jsonable(obj: Any) -> Any:
    """Recursively turn Decimals into ints/floats for JSON output."""
    if isinstance(obj, Decimal):
        return int(obj) if obj == obj.to_integral_value() else float(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    return obj


def dumps_json(obj: Any, **kwargs: Any) -> str:
    kwargs.setdefault("indent", None)
    kwargs.setdefault("sort_keys", False)
    return json.dumps(jsonable(obj), **kwargs)

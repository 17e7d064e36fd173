"""Reference node-ranking embedders used as comparison points.

Three rankings drive one greedy pipeline: virtual nodes take the best-ranked
feasible edge servers (one per virtual node, never shared within a request)
and links take the first feasible delay-ordered path. Requests are handled as
standalone virtual network requests; a suspended request is embedded again
from scratch.

* ``grc``: r = (1 - sigma) * c + sigma * T r, c the normalised free cpu, T the
  column-stochastic free-bandwidth transfer matrix.
* ``rw``: the same walk with teleport vector proportional to cpu * strength.
* ``nrm``: cpu * strength, normalised (exact rational arithmetic).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from vecintent.engine import Engine, IntervalBatch, IntervalReport
from vecintent.intents import LifecycleEvent, LifecycleState, Request, RequestStatus
from vecintent.lam import Mapping
from vecintent.pai import check_links
from vecintent.substrate import SubstrateNetwork

__all__ = ["ALGORITHMS", "NodeRanking", "rank", "embed_vnr", "BaselineScheduler", "DAMPING"]

ALGORITHMS = ("grc", "rw", "nrm")
DAMPING = 0.85
TOLERANCE = 1e-6
MAX_ITER = 200


@dataclass
class NodeRanking:
    algorithm: str
    scores: dict[str, Any]
    iterations: int = 0
    residuals: tuple[float, ...] = ()

    def order(self) -> list[str]:
        """Node ids best first, ties by id."""
        return sorted(self.scores, key=lambda n: (-self.scores[n], n))


def _strengths(net: SubstrateNetwork, ids: list[str]) -> dict[str, Any]:
    adj = net.bandwidth_adjacency(backbone=True)
    return {n: sum(adj.get(n, {}).values()) for n in ids}


def _power(teleport: np.ndarray, T: np.ndarray, sigma: float) -> tuple[np.ndarray, int, tuple[float, ...]]:
    r = teleport.copy()
    residuals = []
    for it in range(1, MAX_ITER + 1):
        nxt = (1.0 - sigma) * teleport + sigma * (T @ r)
        delta = float(np.abs(nxt - r).sum())
        residuals.append(delta)
        r = nxt
        if delta < TOLERANCE:
            break
    total = r.sum()
    return (r / total if total > 0 else r), it, tuple(residuals)


def _normalise(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    if total <= 0:
        return np.full(len(values), 1.0 / len(values))
    return values / total


def rank(algorithm: str, net: SubstrateNetwork, sigma: float = DAMPING) -> NodeRanking:
    """Rank the edge servers of ``net`` by current free resources."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown ranking {algorithm!r}")
    ids = net.edge_servers()
    if not ids:
        raise ValueError("network has no edge servers")
    strength = _strengths(net, ids)
    cpu = {n: net.nodes[n].cpu_free for n in ids}
    if algorithm == "nrm":
        raw = {n: Fraction(cpu[n]) * Fraction(strength[n]) for n in ids}
        total = sum(raw.values())
        if total == 0:
            return NodeRanking("nrm", {n: Fraction(1, len(ids)) for n in ids})
        return NodeRanking("nrm", {n: raw[n] / total for n in ids})

    index = {n: i for i, n in enumerate(ids)}
    T = np.zeros((len(ids), len(ids)))
    adj = net.bandwidth_adjacency(backbone=True)
    for j, n in enumerate(ids):
        s = float(strength[n])
        if s <= 0:
            T[j, j] = 1.0  # isolated: keep its own mass
            continue
        for m, bw in adj.get(n, {}).items():
            T[index[m], j] = float(bw) / s
    if algorithm == "grc":
        teleport = _normalise(np.array([float(cpu[n]) for n in ids]))
    else:
        teleport = _normalise(np.array([float(cpu[n]) * float(strength[n]) for n in ids]))
    r, it, res = _power(teleport, T, sigma)
    return NodeRanking(algorithm, {n: float(r[index[n]]) for n in ids}, it, res)


def embed_vnr(
    request: Request, ranking: NodeRanking, net: SubstrateNetwork, k: int = 5, *, commit: bool = True
) -> Mapping | None:
    """Greedy distinct-node embedding; reserves and returns the mapping or ``None``."""
    m = Mapping(request.id)
    order = ranking.order()
    taken: set[str] = set()

    def fits(v, s) -> bool:
        node = net.nodes[s]
        return node.cpu_free >= v.cpu and node.ram_free >= v.ram

    for v in request.pinned:
        s = v.pin.node
        if s not in net.nodes or s in taken or not fits(v, s):
            return _fail(request, commit)
        m.place(v, s)
        taken.add(s)
    rest = sorted((v for v in request.nodes.values() if v.pin is None), key=lambda v: (-(v.cpu + v.ram), v.id))
    for v in rest:
        s = next((s for s in order if s not in taken and fits(v, s)), None)
        if s is None:
            return _fail(request, commit)
        m.place(v, s)
        taken.add(s)
    for link in sorted(request.links, key=lambda l: (-l.bw, l.id)):
        path = net.first_feasible_path(m.node_map[link.a], m.node_map[link.b], link.bw, link.delay, k, m.link_usage)
        if path is None:
            return _fail(request, commit)
        m.route(link, path)
    if commit:
        if not net.can_reserve(m):
            return _fail(request, commit)
        net.reserve(m)
        request.status = RequestStatus.INSTALLED
    return m


def _fail(request: Request, commit: bool) -> None:
    if commit:
        request.status = RequestStatus.FAILED
    return None


class BaselineScheduler(Engine):
    """Standalone-request online embedding with a node ranking."""

    def __init__(self, net: SubstrateNetwork, ranking: str, *, sigma: float = DAMPING, **kwargs: Any) -> None:
        super().__init__(net, **kwargs)
        if ranking not in ALGORITHMS:
            raise ValueError(f"unknown ranking {ranking!r}")
        self.ranking = ranking
        self.sigma = sigma
        self.algo = f"{ranking}rank"

    def embed(self, request: Request) -> Mapping | None:
        return embed_vnr(request, rank(self.ranking, self.net, self.sigma), self.net, self.k)

    def process_interval(self, batch: IntervalBatch) -> IntervalReport:
        t = batch.t
        self.report = report = IntervalReport(t)
        start = time.perf_counter_ns()
        self.withdrawals(batch, late=False)

        touched: list = []
        moved = {m[0] for m in batch.moves}
        explicit = set(batch.suspended)
        redo: list[Request] = []
        for intent in self.intents.values():
            if intent.state is not LifecycleState.ACTIVE:
                continue
            hit = []
            for r in intent.requests:
                mp = self.mappings.get(r.id)
                if mp is None:
                    continue
                pins = {v.pin.node for v in r.pinned if v.pin.type == "mobile"}
                if (pins & moved) or (intent.id in explicit and r.has_mobile_pin) or check_links(mp, r, self.net):
                    hit.append(r)
            if hit or intent.id in explicit:
                self.fire(intent, LifecycleEvent.TOPOLOGY_UPDATE, t)
                self.stats["suspensions"] += 1
                touched.append(intent)
                for r in hit:
                    self.release(r, t, RequestStatus.PENDING)
                    redo.append(r)

        retry = [i for i in self.intents.values() if i.can_retry]
        fresh = [self.compile(s, t) for s in batch.submitted]
        ready = [i for i in fresh if i.state is LifecycleState.READY]
        requests: list[Request] = list(redo)
        for intent in ready:
            requests.extend(intent.requests)
        for intent in self.intents.values():
            if intent.state is LifecycleState.READY:
                continue
            for r in intent.requests:
                if r.status is RequestStatus.FAILED and self.request_retry_ok(intent, r):
                    requests.append(r)
        requests.sort(key=lambda r: (self.request_cost(r), self.intents[r.intent_id].submit_time, r.id))
        for r in dict.fromkeys(requests):
            intent = self.intents[r.intent_id]
            report.attempts.append((intent.priority.label, r.id))
            m = self.embed(r)
            if m is None:
                self.note_request_failure(r)
            else:
                self.commit(r, m, t)
        for intent in dict.fromkeys(touched + ready + retry):
            self.settle(intent, t)

        self.withdrawals(batch, late=True)
        report.embed_ns = time.perf_counter_ns() - start
        self.report = None
        return report

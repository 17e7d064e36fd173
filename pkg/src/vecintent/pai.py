"""Priority-aware online installation of intents, one interval at a time.

Per interval: withdrawals, path repair of suspended intents, then high
intents (all-or-nothing), pooled mid requests (best effort) and low intents
(all-or-nothing), each class in ascending cost order. The embedder for a
single request is :func:`vecintent.lam.map_request`.
"""

from __future__ import annotations

import logging
import time
from decimal import Decimal
from typing import Any, Iterable

from vecintent.engine import Engine, IntervalBatch, IntervalReport
from vecintent.intents import Intent, LifecycleEvent, LifecycleState, Priority, Request, RequestStatus
from vecintent.lam import Mapping, map_request
from vecintent.substrate import SubstrateNetwork, SubstratePath

log = logging.getLogger(__name__)

__all__ = ["PaiScheduler", "check_links", "remap_request_paths", "request_order"]


def check_links(mapping: Mapping, request: Request, net: SubstrateNetwork) -> list[str]:
    """Ids of virtual links whose substrate path no longer exists or no longer fits."""
    broken = []
    for link in request.links:
        path = mapping.link_map.get(link.id)
        if path is None or not net.path_is_valid(path) or path.total_delay > link.delay:
            broken.append(link.id)
            continue
        ends = (mapping.node_map[link.a], mapping.node_map[link.b])
        if {path.source, path.target} != set(ends):
            broken.append(link.id)
    return broken


def remap_request_paths(
    request: Request, mapping: Mapping, net: SubstrateNetwork, k: int = 5
) -> tuple[Mapping | None, int]:
    """Reroute the broken links of an installed request, keeping node placements.

    ``mapping`` must currently be reserved; it is released first. On success the
    new mapping is reserved and returned with the number of rerouted links; on
    failure nothing is reserved and ``(None, n_broken)`` is returned.
    """
    broken = set(check_links(mapping, request, net))
    net.release(mapping)
    if not broken:
        net.reserve(mapping)
        return mapping, 0
    if any(n not in net.nodes for n in mapping.node_map.values()):
        return None, len(broken)
    paths: dict[str, SubstratePath] = {}
    used: dict[int, Decimal] = {}
    # keep intact paths first so reroutes see their bandwidth as taken
    for link in request.links:
        if link.id not in broken:
            paths[link.id] = mapping.link_map[link.id]
            for uid in paths[link.id].links:
                used[uid] = used.get(uid, Decimal(0)) + link.bw
    for link in sorted((l for l in request.links if l.id in broken), key=lambda l: (-l.bw, l.id)):
        src, dst = mapping.node_map[link.a], mapping.node_map[link.b]
        path = net.first_feasible_path(src, dst, link.bw, link.delay, k, used)
        if path is None:
            return None, len(broken)
        paths[link.id] = path
        for uid in path.links:
            used[uid] = used.get(uid, Decimal(0)) + link.bw
    fresh = Mapping.rebuild(request, net, {v: mapping.node_map[v] for v in mapping.order}, paths)
    if not net.can_reserve(fresh):
        return None, len(broken)
    net.reserve(fresh)
    return fresh, len(broken)


def request_order(requests: Iterable[Request], cost_of: Any, submit_of: Any) -> list[Request]:
    """Location-constrained requests first, then ascending cost, submit time, id."""
    return sorted(requests, key=lambda r: (not r.has_location_constraint, cost_of(r), submit_of(r), r.id))


class PaiScheduler(Engine):
    algo = "pailam"

    def __init__(self, net: SubstrateNetwork, *, d: int = 2, mu: Any = 10, **kwargs: Any) -> None:
        super().__init__(net, **kwargs)
        self.d = d
        self.mu = mu

    # ------------------------------------------------------------ embedding
    def embed(self, request: Request) -> Mapping | None:
        return map_request(request, self.net, self.d, k=self.k, mu=self.mu)

    def _order(self, requests: Iterable[Request]) -> list[Request]:
        return request_order(requests, self.request_cost, lambda r: self.intents[r.intent_id].submit_time)

    def install_all(self, intent: Intent, t: int) -> bool:
        """Embed every request of ``intent`` or none of them."""
        done: list[tuple[Request, Mapping]] = []
        for r in self._order(intent.requests):
            self.report.attempts.append((intent.priority.label, r.id))
            m = self.embed(r)
            if m is None:
                for r2, m2 in done:
                    self.net.release(m2)
                    r2.status = RequestStatus.FAILED
                r.status = RequestStatus.FAILED
                for r3 in intent.requests:
                    r3.status = RequestStatus.FAILED
                return False
            done.append((r, m))
        for r, m in done:
            self.commit(r, m, t)
        return True

    def install_best(self, requests: list[Request], t: int) -> None:
        """Embed each request independently; failures only consume retries."""
        for r in self._order(requests):
            self.report.attempts.append((Priority.MID.label, r.id))
            m = self.embed(r)
            if m is None:
                self.note_request_failure(r)
            else:
                self.commit(r, m, t)

    # ------------------------------------------------------------ suspension
    def detect_suspensions(self, batch: IntervalBatch) -> list[str]:
        """Explicit suspensions plus any Active intent with a now-broken mapping."""
        out = dict.fromkeys(i for i in batch.suspended if i in self.intents)
        moved = {m[0] for m in batch.moves}
        for intent in self.intents.values():
            if intent.state is not LifecycleState.ACTIVE or intent.id in out:
                continue
            for r in intent.requests:
                m = self.mappings.get(r.id)
                if m is None:
                    continue
                pins = {v.pin.node for v in r.pinned if v.pin.type == "mobile"}
                if pins & moved or check_links(m, r, self.net):
                    out[intent.id] = None
                    break
        return [i for i in out if self.intents[i].state is LifecycleState.ACTIVE]

    def handle_suspension(self, intent: Intent, t: int) -> None:
        self.fire(intent, LifecycleEvent.TOPOLOGY_UPDATE, t)
        self.stats["suspensions"] += 1
        failed: list[Request] = []
        for r in intent.requests:
            m = self.mappings.get(r.id)
            if m is None:
                continue
            fresh, n = remap_request_paths(r, m, self.net, self.k)
            if fresh is None:
                # the old mapping is already released
                del self.mappings[r.id]
                self.ops.append({"op": "release", "t": t, "request": r.id})
                failed.append(r)
                r.status = RequestStatus.FAILED
                continue
            if n:
                self.stats["remapped_links"] += n
                self.mappings[r.id] = fresh
                self.ops.append({"op": "release", "t": t, "request": r.id})
                self.ops.append({"op": "reserve", "t": t, **fresh.to_dump()})
        if failed and intent.semantics == "all":
            self.release_intent(intent, t)
        for r in failed:
            r.retry_count += 1
        self.settle(intent, t)

    # ------------------------------------------------------------- interval
    def process_interval(self, batch: IntervalBatch) -> IntervalReport:
        t = batch.t
        self.report = report = IntervalReport(t)
        start = time.perf_counter_ns()
        self.withdrawals(batch, late=False)

        for iid in self.detect_suspensions(batch):
            self.handle_suspension(self.intents[iid], t)

        retry = [i for i in self.intents.values() if i.can_retry]
        fresh = [self.compile(s, t) for s in batch.submitted]
        pool = [i for i in fresh if i.state is LifecycleState.READY] + retry

        def by_class(p: Priority) -> list[Intent]:
            return sorted((i for i in pool if i.priority is p), key=self.intent_key)

        for intent in by_class(Priority.HIGH):
            self.install_all(intent, t)
            self.settle(intent, t)

        mids = by_class(Priority.MID)
        active_mids = [
            i for i in self.intents.values()
            if i.priority is Priority.MID and i.state is LifecycleState.ACTIVE and i not in mids
        ]
        mid_requests = [
            r for i in mids + sorted(active_mids, key=self.intent_key)
            for r in i.requests if self.request_retry_ok(i, r) or i.state is LifecycleState.READY
        ]
        self.install_best(mid_requests, t)
        for intent in mids:
            self.settle(intent, t)

        for intent in by_class(Priority.LOW):
            self.install_all(intent, t)
            self.settle(intent, t)

        self.withdrawals(batch, late=True)
        report.embed_ns = time.perf_counter_ns() - start
        self.report = None
        return report

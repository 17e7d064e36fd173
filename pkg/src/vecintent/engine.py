"""State shared by every online installer: intents, installed mappings, logs.

:class:`Engine` owns the bookkeeping that does not depend on the embedding
strategy: compiling submissions, lifecycle transitions with an event log,
committing and releasing mappings (with a replayable operation log), and
withdrawals. :mod:`vecintent.pai` and :mod:`vecintent.baselines` subclass it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

from vecintent.intents import (
    DEFAULT_RETRY_THRESHOLD,
    Intent,
    LifecycleEvent,
    LifecycleState,
    Request,
    RequestStatus,
    compile_intent,
    cost,
    intent_success,
    transition,
)
from vecintent.lam import Mapping
from vecintent.substrate import SubstrateNetwork

log = logging.getLogger(__name__)

__all__ = ["Submission", "IntervalBatch", "IntervalReport", "Engine", "IntentRecord"]


@dataclass
class Submission:
    intent_id: str
    manifest: dict[str, Any]
    vehicle: str | None = None
    server: str | None = None
    distance_km: float | None = None


@dataclass
class IntervalBatch:
    t: int
    submitted: list[Submission] = field(default_factory=list)
    suspended: list[str] = field(default_factory=list)
    withdrawn: list[str] = field(default_factory=list)
    failed_retry: list[str] = field(default_factory=list)
    moves: list[tuple[str, str, float]] = field(default_factory=list)


@dataclass
class IntervalReport:
    t: int
    attempts: list[tuple[str, str]] = field(default_factory=list)
    embed_ns: int = 0
    committed: int = 0
    node_remaps: int = 0


@dataclass
class IntentRecord:
    """Outcome of one intent as seen by the metrics ledger."""

    intent_id: str
    priority: str
    submit_time: int
    accepted: int
    request_flags: list[int]
    request_costs: list[Decimal]


class Engine:
    algo = "engine"

    def __init__(
        self,
        net: SubstrateNetwork,
        *,
        k: int = 5,
        weights: tuple[Any, Any, Any] = (1, 1, 1),
        retry_threshold: int = DEFAULT_RETRY_THRESHOLD,
        max_requests: int | None = 4,
    ) -> None:
        self.net = net
        self.k = k
        self.weights = weights
        self.retry_threshold = retry_threshold
        self.max_requests = max_requests
        self.intents: dict[str, Intent] = {}
        self.mappings: dict[str, Mapping] = {}
        self.events: list[dict[str, Any]] = []
        self.ops: list[dict[str, Any]] = []
        self.records: dict[str, IntentRecord] = {}
        self.stats = {"committed": 0, "node_remaps": 0, "migrations": 0, "remapped_links": 0, "suspensions": 0}
        self._last_nodes: dict[str, dict[str, str]] = {}
        self._costs: dict[str, Decimal] = {}
        self.report: IntervalReport | None = None

    # -------------------------------------------------------------- helpers
    def request_cost(self, r: Request) -> Decimal:
        if r.id not in self._costs:
            self._costs[r.id] = cost(r, *self.weights)
        return self._costs[r.id]

    def intent_cost(self, intent: Intent) -> Decimal:
        return sum((self.request_cost(r) for r in intent.requests), Decimal(0))

    def intent_key(self, intent: Intent) -> tuple:
        return (self.intent_cost(intent), intent.submit_time, intent.id)

    def accepted(self, intent: Intent) -> int:
        if not intent.requests:
            return 0
        return intent_success(intent.installed_flags(), intent.semantics)

    def fire(self, intent: Intent, event: LifecycleEvent, t: int) -> None:
        before = intent.state
        after = transition(intent, event)
        self.events.append(
            {"t": t, "intent": intent.id, "event": event.value, "state_before": before.value, "state_after": after.value}
        )

    # ------------------------------------------------------------ lifecycle
    def compile(self, sub: Submission, t: int) -> Intent:
        known = {n: v.kind for n, v in self.net.nodes.items()}
        intent = compile_intent(
            sub.manifest,
            sub.intent_id,
            known_nodes=known,
            submit_time=t,
            max_requests=self.max_requests,
            retry_threshold=self.retry_threshold,
            vehicle=sub.vehicle,
        )
        if sub.intent_id in self.intents:
            raise ValueError(f"intent {sub.intent_id} submitted twice")
        self.intents[intent.id] = intent
        self.events.append(
            {"t": t, "intent": intent.id, "event": "submit", "state_before": None, "state_after": intent.state.value}
        )
        if intent.error:
            log.warning("intent %s failed to compile: %s", intent.id, intent.error)
        return intent

    def commit(self, request: Request, mapping: Mapping, t: int, *, reembed: bool = True) -> None:
        """Register a mapping that has already been reserved on the substrate."""
        assert self.net.is_reserved(mapping)
        if reembed and request.ever_installed:
            previous = self._last_nodes.get(request.id, {})
            unpinned = [v for v in request.nodes.values() if v.pin is None]
            self.stats["node_remaps"] += len(unpinned)
            self.stats["migrations"] += sum(previous.get(v.id) != mapping.node_map[v.id] for v in unpinned)
            if self.report is not None:
                self.report.node_remaps += len(unpinned)
        request.ever_installed = True
        request.status = RequestStatus.INSTALLED
        self.mappings[request.id] = mapping
        self._last_nodes[request.id] = dict(mapping.node_map)
        self.stats["committed"] += 1
        if self.report is not None:
            self.report.committed += 1
        self.ops.append({"op": "reserve", "t": t, **mapping.to_dump()})

    def release(self, request: Request, t: int, status: RequestStatus = RequestStatus.FAILED) -> None:
        mapping = self.mappings.pop(request.id, None)
        if mapping is not None:
            self.net.release(mapping)
            self.ops.append({"op": "release", "t": t, "request": request.id})
        request.status = status

    def release_intent(self, intent: Intent, t: int, status: RequestStatus = RequestStatus.FAILED) -> None:
        for r in intent.requests:
            if r.id in self.mappings:
                self.release(r, t, status)
            elif r.status is RequestStatus.INSTALLED:
                r.status = status

    def snapshot(self, intent: Intent) -> None:
        self.records[intent.id] = IntentRecord(
            intent.id,
            intent.priority.label,
            intent.submit_time,
            self.accepted(intent),
            intent.installed_flags(),
            [self.request_cost(r) for r in intent.requests],
        )

    def withdraw(self, intent_id: str, t: int) -> None:
        intent = self.intents[intent_id]
        if intent.state in (LifecycleState.WITHDRAWN, LifecycleState.TERMINATED):
            return
        self.snapshot(intent)
        self.release_intent(intent, t, RequestStatus.PENDING)
        intent.withdraw_time = t
        self.fire(intent, LifecycleEvent.WITHDRAW, t)
        self.fire(intent, LifecycleEvent.DELETE, t)

    def finalize(self) -> dict[str, IntentRecord]:
        """Records for every submitted intent, snapshotting those still live."""
        for intent in self.intents.values():
            if intent.id not in self.records:
                self.snapshot(intent)
        return {i: self.records[i] for i in self.intents}

    def request_retry_ok(self, intent: Intent, r: Request) -> bool:
        if r.status is RequestStatus.INSTALLED or r.retry_count >= self.retry_threshold:
            return False
        if intent.state is LifecycleState.ACTIVE:
            return True
        return intent.can_retry

    def note_request_failure(self, r: Request) -> None:
        r.status = RequestStatus.FAILED
        r.retry_count += 1

    def settle(self, intent: Intent, t: int) -> None:
        """Fire the install/recompile outcome after an installation round."""
        ok = self.accepted(intent)
        if intent.state is LifecycleState.READY:
            self.fire(intent, LifecycleEvent.INSTALL_OK if ok else LifecycleEvent.INSTALL_FAIL, t)
        elif intent.state in (LifecycleState.FAILED, LifecycleState.SUSPENDING):
            self.fire(intent, LifecycleEvent.RECOMPILE_OK if ok else LifecycleEvent.RECOMPILE_FAIL, t)

    # -------------------------------------------------------------- driver
    def process_interval(self, batch: IntervalBatch) -> IntervalReport:  # pragma: no cover
        raise NotImplementedError

    def withdrawals(self, batch: IntervalBatch, late: bool) -> None:
        """Withdraw intents; same-interval submissions are withdrawn after installing."""
        same = {s.intent_id for s in batch.submitted}
        for iid in batch.withdrawn:
            if (iid in same) == late and iid in self.intents:
                self.withdraw(iid, batch.t)

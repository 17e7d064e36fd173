"""Intents, their compiled requests, the lifecycle machine and the cost model."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from vecintent.substrate import NodeKind, to_decimal

__all__ = [
    "Priority",
    "Pin",
    "VirtualNode",
    "VirtualLink",
    "Request",
    "RequestStatus",
    "Intent",
    "LifecycleState",
    "LifecycleEvent",
    "IllegalTransition",
    "CompileError",
    "TRANSITIONS",
    "compile_intent",
    "transition",
    "legal_events",
    "cost",
    "intent_success",
    "DEFAULT_RETRY_THRESHOLD",
]

DEFAULT_RETRY_THRESHOLD = 3


class Priority(Enum):
    """Intent priority; ``numeric`` follows the controller convention (larger wins)."""

    HIGH = ("high", 300)
    MID = ("mid", 200)
    LOW = ("low", 100)

    def __init__(self, label: str, numeric: int) -> None:
        self.label = label
        self.numeric = numeric

    @property
    def rank(self) -> int:
        """0 for the most important class."""
        return {"high": 0, "mid": 1, "low": 2}[self.label]

    @classmethod
    def parse(cls, value: Any) -> "Priority":
        if isinstance(value, Priority):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            for p in cls:
                if p.numeric == value:
                    return p
        if isinstance(value, str):
            for p in cls:
                if p.label == value.lower():
                    return p
        raise ValueError(f"unknown priority {value!r}")

    def __lt__(self, other: "Priority") -> bool:
        # high > mid > low
        return self.numeric < other.numeric


@dataclass(frozen=True)
class Pin:
    type: str  # "fixed" | "mobile"
    node: str


@dataclass
class VirtualNode:
    id: str
    cpu: Decimal
    ram: Decimal
    pin: Pin | None = None


@dataclass
class VirtualLink:
    a: str
    b: str
    bw: Decimal
    delay: Decimal

    @property
    def id(self) -> str:
        return f"{self.a}-{self.b}"

    def other(self, v: str) -> str:
        return self.b if v == self.a else self.a


class RequestStatus(str, Enum):
    PENDING = "pending"
    INSTALLED = "installed"
    FAILED = "failed"


@dataclass(eq=False)
class Request:
    id: str
    nodes: dict[str, VirtualNode]
    links: list[VirtualLink]
    status: RequestStatus = RequestStatus.PENDING
    intent_id: str | None = None
    retry_count: int = 0
    ever_installed: bool = False

    def __post_init__(self) -> None:
        self._incident: dict[str, list[VirtualLink]] = {v: [] for v in self.nodes}
        for link in self.links:
            self._incident[link.a].append(link)
            self._incident[link.b].append(link)

    def incident(self, v: str) -> list[VirtualLink]:
        return self._incident[v]

    def neighbors(self, v: str) -> list[str]:
        return [l.other(v) for l in self._incident[v]]

    @property
    def pinned(self) -> list[VirtualNode]:
        return [n for n in self.nodes.values() if n.pin is not None]

    @property
    def has_location_constraint(self) -> bool:
        return any(n.pin is not None for n in self.nodes.values())

    @property
    def has_mobile_pin(self) -> bool:
        return any(n.pin is not None and n.pin.type == "mobile" for n in self.nodes.values())

    def bandwidth_adjacency(self) -> dict[str, dict[str, Decimal]]:
        return {v: {l.other(v): l.bw for l in self._incident[v]} for v in self.nodes}

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        start = next(iter(self.nodes))
        seen = {start}
        stack = [start]
        while stack:
            for m in self.neighbors(stack.pop()):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == len(self.nodes)

    def manifest(self) -> dict[str, Any]:
        nodes = []
        for n in self.nodes.values():
            rec: dict[str, Any] = {"id": n.id, "cpu": n.cpu, "ram": n.ram}
            if n.pin is not None:
                rec["pin"] = {"type": n.pin.type, "node": n.pin.node}
            nodes.append(rec)
        links = [{"a": l.a, "b": l.b, "bw_mbps": l.bw, "delay_ms": l.delay} for l in self.links]
        return {"nodes": nodes, "links": links}


class LifecycleState(str, Enum):
    READY = "Ready"
    ACTIVE = "Active"
    SUSPENDING = "Suspending"
    FAILED = "Failed"
    WITHDRAWN = "Withdrawn"
    TERMINATED = "Terminated"


class LifecycleEvent(str, Enum):
    INSTALL_OK = "install_ok"
    INSTALL_FAIL = "install_fail"
    TOPOLOGY_UPDATE = "topology_update"
    RECOMPILE_OK = "recompile_ok"
    RECOMPILE_FAIL = "recompile_fail"
    WITHDRAW = "withdraw"
    RESUBMIT = "resubmit"
    DELETE = "delete"


S, E = LifecycleState, LifecycleEvent

#: Every legal (state, event) edge. Reinstallation of a Failed intent goes
#: through the recompile events and is further gated on the retry budget.
TRANSITIONS: dict[tuple[LifecycleState, LifecycleEvent], LifecycleState] = {
    (S.READY, E.INSTALL_OK): S.ACTIVE,
    (S.READY, E.INSTALL_FAIL): S.FAILED,
    (S.ACTIVE, E.TOPOLOGY_UPDATE): S.SUSPENDING,
    (S.SUSPENDING, E.RECOMPILE_OK): S.ACTIVE,
    (S.SUSPENDING, E.RECOMPILE_FAIL): S.FAILED,
    (S.FAILED, E.RECOMPILE_OK): S.ACTIVE,
    (S.FAILED, E.RECOMPILE_FAIL): S.FAILED,
    (S.ACTIVE, E.WITHDRAW): S.WITHDRAWN,
    (S.FAILED, E.WITHDRAW): S.WITHDRAWN,
    (S.WITHDRAWN, E.RESUBMIT): S.READY,
    (S.WITHDRAWN, E.DELETE): S.TERMINATED,
}

_FAILING = {E.INSTALL_FAIL, E.RECOMPILE_FAIL}


class IllegalTransition(Exception):
    def __init__(self, state: LifecycleState, event: LifecycleEvent) -> None:
        super().__init__(f"event {event.value!r} is not allowed in state {state.value!r}")
        self.state = state
        self.event = event


class CompileError(ValueError):
    pass


@dataclass(eq=False)
class Intent:
    id: str
    priority: Priority
    requests: list[Request]
    state: LifecycleState = LifecycleState.READY
    retry_count: int = 0
    submit_time: int = 0
    withdraw_time: int | None = None
    vehicle: str | None = None
    error: str | None = None
    retry_threshold: int = DEFAULT_RETRY_THRESHOLD
    compile_count: int = 1

    @property
    def has_mobile_pin(self) -> bool:
        return any(r.has_mobile_pin for r in self.requests)

    def installed_flags(self) -> list[int]:
        return [int(r.status is RequestStatus.INSTALLED) for r in self.requests]

    @property
    def semantics(self) -> str:
        return "best" if self.priority is Priority.MID else "all"

    @property
    def can_retry(self) -> bool:
        return self.state is LifecycleState.FAILED and self.retry_count < self.retry_threshold and bool(self.requests)


def legal_events(intent: Intent) -> set[LifecycleEvent]:
    out = set()
    for (state, event) in TRANSITIONS:
        if state is not intent.state:
            continue
        if state is S.FAILED and event in (E.RECOMPILE_OK, E.RECOMPILE_FAIL) and not intent.can_retry:
            continue
        out.add(event)
    return out


def transition(intent: Intent, event: LifecycleEvent | str) -> LifecycleState:
    """Apply ``event`` to ``intent`` and return the new state.

    Raises :class:`IllegalTransition` (leaving the intent untouched) when the
    pair is not an edge of the lifecycle graph, or when a Failed intent
    has used up its retry budget.
    """
    event = LifecycleEvent(event)
    key = (intent.state, event)
    if key not in TRANSITIONS or event not in legal_events(intent):
        raise IllegalTransition(intent.state, event)
    new = TRANSITIONS[key]
    if intent.state is S.FAILED and event in (E.RECOMPILE_OK, E.RECOMPILE_FAIL):
        intent.compile_count += 1
    if event in _FAILING:
        intent.retry_count += 1
    if new is S.ACTIVE:
        intent.retry_count = 0
    if event is E.RESUBMIT:
        intent.retry_count = 0
        intent.compile_count = 1
        for r in intent.requests:
            r.status = RequestStatus.PENDING
            r.retry_count = 0
    intent.state = new
    return new


def _positive(value: Any, what: str) -> Decimal:
    try:
        dec = to_decimal(value)
    except (TypeError, ArithmeticError, ValueError) as exc:
        raise CompileError(f"{what} is not a number: {value!r}") from exc
    if not dec.is_finite() or dec <= 0:
        raise CompileError(f"{what} must be positive, got {value!r}")
    return dec


def _compile_request(
    rid: str, spec: Mapping[str, Any], intent_id: str, known_nodes: Mapping[str, NodeKind] | None
) -> Request:
    nodes: dict[str, VirtualNode] = {}
    for rec in spec.get("nodes") or []:
        vid = str(rec["id"])
        if vid in nodes:
            raise CompileError(f"{rid}: duplicate virtual node {vid!r}")
        pin = None
        if rec.get("pin"):
            ptype = str(rec["pin"].get("type", "fixed"))
            pnode = str(rec["pin"]["node"])
            if ptype not in ("fixed", "mobile"):
                raise CompileError(f"{rid}: unknown pin type {ptype!r}")
            if known_nodes is not None:
                if pnode not in known_nodes:
                    raise CompileError(f"{rid}: pin references unknown node {pnode!r}")
                if ptype == "mobile" and known_nodes[pnode] is not NodeKind.MOBILE_USER:
                    raise CompileError(f"{rid}: mobile pin {pnode!r} is not a mobile user")
            pin = Pin(ptype, pnode)
        nodes[vid] = VirtualNode(vid, _positive(rec["cpu"], f"{rid}/{vid} cpu"), _positive(rec["ram"], f"{rid}/{vid} ram"), pin)
    if not nodes:
        raise CompileError(f"{rid}: request has no virtual nodes")
    links: list[VirtualLink] = []
    seen = set()
    for rec in spec.get("links") or []:
        a, b = str(rec["a"]), str(rec["b"])
        if a not in nodes or b not in nodes:
            raise CompileError(f"{rid}: link {a}-{b} references an undeclared node")
        if a == b:
            raise CompileError(f"{rid}: link endpoints must differ")
        if frozenset((a, b)) in seen:
            raise CompileError(f"{rid}: duplicate link {a}-{b}")
        seen.add(frozenset((a, b)))
        links.append(
            VirtualLink(a, b, _positive(rec["bw_mbps"], f"{rid} link bw"), _positive(rec["delay_ms"], f"{rid} link delay"))
        )
    req = Request(rid, nodes, links, intent_id=intent_id)
    if not req.is_connected():
        raise CompileError(f"{rid}: virtual graph is not connected")
    return req


def compile_intent(
    manifest: Mapping[str, Any],
    intent_id: str,
    *,
    known_nodes: Mapping[str, NodeKind] | None = None,
    submit_time: int = 0,
    max_requests: int | None = 4,
    retry_threshold: int = DEFAULT_RETRY_THRESHOLD,
    vehicle: str | None = None,
) -> Intent:
    """Validate and normalise a declarative manifest into an :class:`Intent`.

    Compilation is structural: every request of the manifest becomes one
    :class:`Request` verbatim. On any defect the intent is returned in the
    Failed state with ``error`` set and no requests.
    """
    try:
        priority = Priority.parse(manifest.get("priority"))
        specs = manifest.get("requests")
        if not isinstance(specs, Sequence) or isinstance(specs, (str, bytes)) or not specs:
            raise CompileError("manifest needs a non-empty 'requests' list")
        if max_requests is not None and len(specs) > max_requests:
            raise CompileError(f"{len(specs)} requests exceed the limit of {max_requests}")
        requests = [
            _compile_request(f"{intent_id}/r{i}", spec, intent_id, known_nodes) for i, spec in enumerate(specs)
        ]
    except (CompileError, ValueError, KeyError, TypeError, AttributeError) as exc:
        prio = Priority.LOW
        try:
            prio = Priority.parse(manifest.get("priority"))
        except (ValueError, AttributeError):
            pass
        return Intent(
            intent_id,
            prio,
            [],
            state=LifecycleState.FAILED,
            retry_count=retry_threshold,
            submit_time=submit_time,
            vehicle=vehicle,
            error=str(exc),
            retry_threshold=retry_threshold,
        )
    return Intent(
        intent_id,
        priority,
        requests,
        submit_time=submit_time,
        vehicle=vehicle,
        retry_threshold=retry_threshold,
    )


def cost(scope: Request | Intent | Iterable[Request], alpha: Any = 1, beta: Any = 1, gamma: Any = 1) -> Decimal:
    """Weighted resource footprint ``a*sum(cpu) + b*sum(ram) + g*sum(bw/delay)``."""
    alpha, beta, gamma = to_decimal(alpha), to_decimal(beta), to_decimal(gamma)
    if min(alpha, beta, gamma) < 0:
        raise ValueError("cost weights must be non-negative")
    if isinstance(scope, Request):
        requests: Iterable[Request] = [scope]
    elif isinstance(scope, Intent):
        requests = scope.requests
    else:
        requests = scope
    cpu = ram = net = Decimal(0)
    for r in requests:
        for n in r.nodes.values():
            cpu += n.cpu
            ram += n.ram
        for l in r.links:
            net += l.bw / l.delay
    return alpha * cpu + beta * ram + gamma * net


def intent_success(flags: Sequence[int], semantics: str = "all") -> int:
    """Intent-level success from per-request flags (conjunction or partial)."""
    if not flags:
        raise ValueError("at least one request flag is required")
    if semantics == "all":
        return int(all(flags))
    if semantics == "best":
        return int(any(flags))
    raise ValueError(f"unknown semantics {semantics!r}")

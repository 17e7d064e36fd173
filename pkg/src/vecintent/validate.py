"""Independent feasibility checker for operation logs.

The checker rebuilds resource state from the raw scenario description (not
from :class:`~vecintent.substrate.SubstrateNetwork`) and replays every
``add_user``/``move_user``/``remove_user``/``reserve``/``release`` operation,
checking each reservation against the state just before it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Mapping

__all__ = ["Violation", "ValidationReport", "HashMismatch", "request_table", "validate_ops", "validate_dump"]


class HashMismatch(ValueError):
    pass


@dataclass
class Violation:
    kind: str
    request: str | None
    detail: str
    t: int | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "request": self.request, "detail": self.detail, "t": self.t}


@dataclass
class ValidationReport:
    reservations: int = 0
    releases: int = 0
    violations: list[Violation] = field(default_factory=list)
    conservation: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.conservation

    def summary(self) -> str:
        return f"{len(self.violations)} violations, {len(self.conservation)} conservation breaches, {self.reservations} reservations checked"


def _d(x: Any) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def request_table(timeline: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    """Request id -> raw request spec from the timeline's manifests."""
    out = {}
    for batch in timeline["intervals"]:
        for sub in batch["submitted"]:
            reqs = sub["manifest"].get("requests") or []
            for i, spec in enumerate(reqs):
                out[f"{sub['intent_id']}/r{i}"] = spec
    return out


class _State:
    def __init__(self, topology: Mapping[str, Any]) -> None:
        self.cap: dict[str, list[Decimal]] = {}
        self.free: dict[str, list[Decimal]] = {}
        self.kind: dict[str, str] = {}
        self.links: dict[frozenset, dict[str, Any]] = {}
        self.gen: dict[frozenset, int] = {}
        self.attach: dict[str, frozenset] = {}
        for n in topology["nodes"]:
            self._node(str(n["id"]), _d(n["cpu"]), _d(n["ram"]), n.get("kind", "edge_server"))
        for l in topology["links"]:
            self._link(str(l["a"]), str(l["b"]), _d(l["bw_mbps"]), _d(l["delay_ms"]))

    def _node(self, nid: str, cpu: Decimal, ram: Decimal, kind: str) -> None:
        self.cap[nid] = [cpu, ram]
        self.free[nid] = [cpu, ram]
        self.kind[nid] = kind

    def _link(self, a: str, b: str, bw: Decimal, delay: Decimal) -> None:
        key = frozenset((a, b))
        self.gen[key] = self.gen.get(key, 0) + 1
        self.links[key] = {"cap": bw, "free": bw, "delay": delay, "gen": self.gen[key]}


def validate_ops(
    topology: Mapping[str, Any],
    timeline: Mapping[str, Any],
    ops: list[Mapping[str, Any]],
    *,
    distinct_nodes: bool = False,
) -> ValidationReport:
    """Replay ``ops`` against ``topology``; every reservation must be feasible."""
    st = _State(topology)
    table = request_table(timeline)
    held: dict[str, tuple[dict[str, list[Decimal]], dict[tuple, Decimal]]] = {}
    rejected: set[str] = set()  # their later release is a consequence, not a new fault
    rep = ValidationReport()

    def bad(kind: str, req: str | None, detail: str, t: Any) -> None:
        rep.violations.append(Violation(kind, req, detail, t))

    for op in ops:
        kind, t = op["op"], op.get("t")
        if kind == "add_user":
            u = op["user"]
            st._node(u, _d(op["cpu"]), _d(op["ram"]), "mobile_user")
            st._link(u, op["server"], _d(op["bw"]), _d(op["delay"]))
            st.attach[u] = frozenset((u, op["server"]))
        elif kind == "move_user":
            u = op["user"]
            old = st.attach.get(u)
            if old is not None:
                st.links.pop(old, None)
            st._link(u, op["server"], _d(op["bw"]), _d(op["delay"]))
            st.attach[u] = frozenset((u, op["server"]))
        elif kind == "remove_user":
            u = op["user"]
            for key in [k for k in st.links if u in k]:
                del st.links[key]
            if any(u in nodes for nodes, _ in held.values()):
                bad("dangling", None, f"user {u} removed while hosting a reservation", t)
            st.cap.pop(u, None)
            st.free.pop(u, None)
        elif kind == "release":
            rid = op["request"]
            if rid not in held:
                if rid in rejected:
                    rejected.discard(rid)
                else:
                    bad("double_release", rid, "release of a request that holds nothing", t)
                continue
            nodes, links = held.pop(rid)
            for n, (c, r) in nodes.items():
                if n in st.free:
                    st.free[n][0] += c
                    st.free[n][1] += r
            for (key, g), bw in links.items():
                link = st.links.get(key)
                if link is not None and link["gen"] == g:
                    link["free"] += bw
            rep.releases += 1
        elif kind == "reserve":
            rep.reservations += 1
            if not _check_reserve(st, table, op, held, bad, distinct_nodes):
                rejected.add(op["request"])
        else:
            bad("unknown_op", None, f"unknown operation {kind!r}", t)

    # conservation: free + held == capacity on everything still present
    used_n: dict[str, list[Decimal]] = {}
    used_l: dict[frozenset, Decimal] = {}
    for nodes, links in held.values():
        for n, (c, r) in nodes.items():
            u = used_n.setdefault(n, [Decimal(0), Decimal(0)])
            u[0] += c
            u[1] += r
        for (key, g), bw in links.items():
            if key in st.links and st.links[key]["gen"] == g:
                used_l[key] = used_l.get(key, Decimal(0)) + bw
    for n, cap in st.cap.items():
        u = used_n.get(n, [Decimal(0), Decimal(0)])
        for i, what in enumerate(("cpu", "ram")):
            if st.free[n][i] + u[i] != cap[i] or st.free[n][i] < 0:
                rep.conservation.append(f"node {n} {what}")
    for key, link in st.links.items():
        if link["free"] + used_l.get(key, Decimal(0)) != link["cap"] or link["free"] < 0:
            rep.conservation.append(f"link {'-'.join(sorted(key))}")
    return rep


def _check_reserve(st: _State, table, op, held, bad, distinct_nodes: bool) -> bool:
    rid, t = op["request"], op.get("t")
    spec = table.get(rid)
    if spec is None:
        bad("unknown_request", rid, "request not found in the scenario", t)
        return False
    if rid in held:
        bad("double_reserve", rid, "request already holds resources", t)
        return True  # the earlier hold stays valid
    nodes_map: Mapping[str, str] = op["nodes"]
    vnodes = {str(v["id"]): v for v in spec["nodes"]}
    ok = True
    if set(nodes_map) != set(vnodes):
        bad("node_map", rid, "mapped virtual nodes differ from the request", t)
        return False
    need_n: dict[str, list[Decimal]] = {}
    for vid, v in vnodes.items():
        s = nodes_map[vid]
        if s not in st.free:
            bad("node_missing", rid, f"{vid} mapped to unknown node {s}", t)
            return False
        pin = v.get("pin")
        if pin and pin["node"] != s:
            bad("pin", rid, f"{vid} pinned to {pin['node']} but mapped to {s}", t)
            ok = False
        need = need_n.setdefault(s, [Decimal(0), Decimal(0)])
        need[0] += _d(v["cpu"])
        need[1] += _d(v["ram"])
    if distinct_nodes and len(set(nodes_map.values())) != len(nodes_map):
        bad("colocation", rid, "two virtual nodes share a substrate node", t)
        ok = False
    for s, (c, r) in need_n.items():
        if st.free[s][0] < c or st.free[s][1] < r:
            bad("node_capacity", rid, f"{s} lacks cpu/ram for {c}/{r}", t)
            ok = False
    need_l: dict[tuple, Decimal] = {}
    link_paths: Mapping[str, list[str]] = op.get("links", {})
    claimed: Mapping[str, Any] = op.get("delays", {})
    for l in spec.get("links") or []:
        a, b = str(l["a"]), str(l["b"])
        lid = f"{a}-{b}"
        path = link_paths.get(lid)
        if path is None:
            bad("link_map", rid, f"virtual link {lid} unmapped", t)
            ok = False
            continue
        ends = {nodes_map[a], nodes_map[b]}
        if not path or {path[0], path[-1]} != ends or (len(ends) == 1 and len(path) != 1):
            bad("endpoints", rid, f"path of {lid} does not join its endpoint images", t)
            ok = False
            continue
        if len(set(path)) != len(path):
            bad("loop", rid, f"path of {lid} repeats a node", t)
            ok = False
            continue
        relays = [m for m in path[1:-1] if st.kind.get(m) == "mobile_user"]
        if relays:
            bad("relay", rid, f"path of {lid} relays through vehicle {relays[0]}", t)
            ok = False
            continue
        delay = Decimal(0)
        broken = False
        for x, y in zip(path, path[1:]):
            key = frozenset((x, y))
            link = st.links.get(key)
            if link is None:
                bad("no_link", rid, f"path of {lid} uses missing link {x}-{y}", t)
                broken = True
                break
            delay += link["delay"]
            k2 = (key, link["gen"])
            need_l[k2] = need_l.get(k2, Decimal(0)) + _d(l["bw_mbps"])
        if broken:
            ok = False
            continue
        budget = _d(l["delay_ms"])
        stated = _d(claimed[lid]) if lid in claimed else delay
        if stated != delay or delay > budget:
            bad("delay", rid, f"path of {lid}: delay {stated} (recomputed {delay}) vs budget {budget}", t)
            ok = False
    for (key, g), bw in need_l.items():
        if st.links[key]["free"] < bw:
            bad("bandwidth", rid, f"link {'-'.join(sorted(key))} lacks {bw} Mbps", t)
            ok = False
    if not ok:
        return False
    for s, (c, r) in need_n.items():
        st.free[s][0] -= c
        st.free[s][1] -= r
    for (key, g), bw in need_l.items():
        st.links[key]["free"] -= bw
    held[rid] = (need_n, need_l)
    return True


def validate_dump(dump: Mapping[str, Any], scenario: Mapping[str, Any], *, expected_hash: str | None = None,
                  distinct_nodes: bool | None = None) -> ValidationReport:
    """Check a run's mapping dump against the raw scenario it claims to come from."""
    want = expected_hash or scenario.get("hash")
    if want is not None and dump.get("scenario_hash") != want:
        raise HashMismatch(f"dump was produced for scenario {dump.get('scenario_hash')!r}, not {want!r}")
    if distinct_nodes is None:
        distinct_nodes = str(dump.get("algo", "")).endswith("rank")
    return validate_ops(scenario["topology"], scenario["timeline"], dump["ops"], distinct_nodes=distinct_nodes)

"""Shared builders for small hand-checkable networks and requests."""

from __future__ import annotations

from decimal import Decimal

import pytest

from vecintent.intents import Request, VirtualLink, VirtualNode, Pin
from vecintent.substrate import SubstrateNetwork


def line_net(n: int = 5, cpu=10, ram=10, bw=100, delay=1, prefix: str = "n") -> SubstrateNetwork:
    net = SubstrateNetwork()
    for i in range(1, n + 1):
        net.add_node(f"{prefix}{i}", cpu, ram)
    for i in range(1, n):
        net.add_link(f"{prefix}{i}", f"{prefix}{i + 1}", bw, delay)
    return net


def make_request(rid: str, nodes, links, intent_id: str | None = None) -> Request:
    """``nodes``: (id, cpu, ram[, pin_node[, pin_type]]); ``links``: (a, b, bw, delay)."""
    vn = {}
    for spec in nodes:
        vid, cpu, ram = spec[:3]
        pin = None
        if len(spec) > 3 and spec[3] is not None:
            pin = Pin(spec[4] if len(spec) > 4 else "fixed", spec[3])
        vn[vid] = VirtualNode(vid, Decimal(cpu), Decimal(ram), pin)
    vl = [VirtualLink(a, b, Decimal(bw), Decimal(d)) for a, b, bw, d in links]
    return Request(rid, vn, vl, intent_id=intent_id or rid.split("/")[0])


def manifest(priority: str, *requests) -> dict:
    """Manifest from request specs of the form (nodes, links) as in :func:`make_request`."""
    out = []
    for nodes, links in requests:
        recs = []
        for spec in nodes:
            rec = {"id": spec[0], "cpu": spec[1], "ram": spec[2]}
            if len(spec) > 3 and spec[3] is not None:
                rec["pin"] = {"type": spec[4] if len(spec) > 4 else "fixed", "node": spec[3]}
            recs.append(rec)
        out.append({"nodes": recs, "links": [{"a": a, "b": b, "bw_mbps": bw, "delay_ms": d} for a, b, bw, d in links]})
    return {"priority": priority, "requests": out}


@pytest.fixture
def line5() -> SubstrateNetwork:
    return line_net(5)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def acceptance_line(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

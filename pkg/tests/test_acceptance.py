"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Comparative criteria run on synthetic desk-scale scenarios: 50 edge servers,
300 vehicles over one hour in 60 s intervals (60 intervals), seeds 1..10.
"""

from __future__ import annotations

import json
import statistics
from decimal import Decimal
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from conftest import acceptance_line, make_request
from oracles import brute_force_embed, mapping_feasible, random_instance, to_nx
from vecintent.baselines import embed_vnr, rank
from vecintent.intents import (
    TRANSITIONS,
    IllegalTransition,
    Intent,
    LifecycleEvent,
    LifecycleState,
    Priority,
    cost,
    transition,
)
from vecintent.lam import map_request, search_depth
from vecintent.scenario import WorkloadParams, build_scenario, wired_delay
from vecintent.simulation import ALGOS, simulate
from vecintent.substrate import SubstrateNetwork, weighted_avg_neighbor_degree
from vecintent.validate import validate_dump

SEEDS = range(1, 11)
LOAD = dict(k=50, n_vehicles=300, duration_s=3600, interval_s=60)
BASELINES = ("grcrank", "rwrank", "nrmrank")


@pytest.fixture(scope="module")
def campaign():
    """All four embedders on the same ten saturating scenarios."""
    out = {}
    for seed in SEEDS:
        sc = build_scenario(seed, **LOAD)
        raw = sc.to_dict()
        for algo in ALGOS:
            res = simulate(sc, algo, seed)
            rep = validate_dump(res.dump(), raw)
            s = res.ledger.summary()
            out[algo, seed] = {
                "summary": s,
                "median_ns": s["timing"][algo]["median_ns"],
                "total_ns": s["timing"][algo]["total_ns"],
                "stats": res.stats,
                "report": rep,
                "conservation": res.conservation,
            }
    return out


def test_criterion_01_formula_goldens():
    checks = {}
    req = make_request("g/r0", [("a", 2, 4), ("b", 1, 2)], [("a", "b", 1, 10), ("a", "b", 2, 100)])
    checks["cost"] = cost(req) == Decimal("9.12")
    checks["depth"] = [search_depth(30, 10, 2), search_depth(5, 10, 2), search_depth(100, 10, 2)] == [6, 2, 20]
    checks["wired"] = wired_delay(10) == Decimal("0.05")
    adj = {"a": {"b": Decimal(2)}, "b": {"a": Decimal(2), "c": Decimal(4)}, "c": {"b": Decimal(4)}}
    checks["knn"] = (weighted_avg_neighbor_degree(adj, "b"), weighted_avg_neighbor_degree(adj, "a")) == (1.0, 2.0)
    net = SubstrateNetwork()
    for n in "abc":
        net.add_node(n, 1, 1)
    net.add_link("a", "b", 2, 1)
    net.add_link("b", "c", 4, 1)
    nrm = rank("nrm", net).scores
    checks["nrm"] = (nrm["a"], nrm["b"], nrm["c"]) == (Fraction(1, 6), Fraction(1, 2), Fraction(1, 3))
    ok = all(checks.values())
    acceptance_line(1, ok, "exact goldens " + " ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items()))
    assert ok


def test_criterion_02_soundness(campaign):
    installed = sum(r["report"].reservations for r in campaign.values())
    violations = sum(len(r["report"].violations) for r in campaign.values())
    breaches = sum(len(r["report"].conservation) + len(r["conservation"]) for r in campaign.values())
    ok = installed >= 10_000 and violations == 0 and breaches == 0
    acceptance_line(2, ok, f"{installed} installed mappings, {violations} violations, {breaches} conservation breaches")
    assert ok


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(2024)
    unconfirmed = 0
    feasible = misses = 0
    for _ in range(200):
        net, req = random_instance(rng)
        G = to_nx(net)
        oracle = brute_force_embed(net, req)
        distinct_oracle = brute_force_embed(net, req, distinct=True)
        m = map_request(req, net, commit=False)
        if m is not None and not mapping_feasible(G, req, m.node_map, {k: list(p.nodes) for k, p in m.link_map.items()}):
            unconfirmed += 1
        for algo in ("grc", "rw", "nrm"):
            b = embed_vnr(req, rank(algo, net), net, commit=False)
            if b is not None:
                paths = {k: list(p.nodes) for k, p in b.link_map.items()}
                if distinct_oracle is None or not mapping_feasible(G, req, b.node_map, paths):
                    unconfirmed += 1
        if oracle is not None:
            feasible += 1
            misses += m is None
        elif m is not None:
            unconfirmed += 1
    miss_rate = misses / feasible if feasible else 0.0
    ok = unconfirmed == 0 and miss_rate < 0.20
    acceptance_line(3, ok, f"200 instances, {unconfirmed} unconfirmed successes, LAM miss rate {miss_rate:.3f} ({misses}/{feasible})")
    assert ok


def test_criterion_04_priority_behaviour(campaign):
    good = 0
    parts = []
    overall = []
    for seed in SEEDS:
        s = campaign["pailam", seed]["summary"]
        high, mid, low = s["intent_acceptance_high"], s["request_acceptance_mid"], s["intent_acceptance_low"]
        overall.append(s["intent_acceptance"])
        good += high >= mid >= low
        parts.append(f"{high:.2f}/{mid:.2f}/{low:.2f}")
    in_band = all(0.5 <= a <= 0.9 for a in overall)
    mid_any = statistics.mean(campaign["pailam", s]["summary"]["intent_acceptance_mid"] for s in SEEDS)
    ok = good >= 8 and in_band
    acceptance_line(
        4, ok,
        f"high>=mid>=low in {good}/10 seeds, overall acceptance {min(overall):.3f}..{max(overall):.3f}, "
        f"mean intent-level mid (any request) {mid_any:.3f}; "
        f"high/mid(request)/low per seed {' '.join(parts)}",
    )
    assert ok


def test_criterion_05_comparative_acceptance(campaign):
    wins = {b: 0 for b in BASELINES}
    for seed in SEEDS:
        ours = campaign["pailam", seed]["summary"]["intent_acceptance"]
        for b in BASELINES:
            wins[b] += ours > campaign[b, seed]["summary"]["intent_acceptance"]
    mean = {a: statistics.mean(campaign[a, s]["summary"]["intent_acceptance"] for s in SEEDS) for a in ALGOS}
    ok = all(w >= 8 for w in wins.values())
    acceptance_line(
        5, ok,
        "pailam wins " + ", ".join(f"{b} {w}/10" for b, w in wins.items())
        + "; mean acceptance " + " ".join(f"{a}={v:.3f}" for a, v in mean.items()),
    )
    assert ok


def test_criterion_06_comparative_runtime(campaign):
    wins = 0
    for seed in SEEDS:
        ours = campaign["pailam", seed]["median_ns"]
        wins += all(ours < campaign[b, seed]["median_ns"] for b in BASELINES)
    med = {a: statistics.median(campaign[a, s]["median_ns"] for s in SEEDS) / 1e6 for a in ALGOS}
    ok = wins >= 8
    acceptance_line(
        6, ok,
        f"pailam fastest median interval in {wins}/10 seeds; median ms " + " ".join(f"{a}={v:.1f}" for a, v in med.items()),
    )
    assert ok


def test_criterion_07_remap_vs_reinstall():
    params = WorkloadParams(location_ratio=0.5)
    remaps = {a: 0 for a in ALGOS}
    suspensions = 0
    for seed in (1, 2, 3):
        sc = build_scenario(seed, k=50, n_vehicles=150, params=params)
        for algo in ALGOS:
            res = simulate(sc, algo, seed)
            remaps[algo] += res.stats["node_remaps"]
            suspensions += res.stats["suspensions"] if algo == "pailam" else 0
    ok = suspensions > 0 and all(remaps["pailam"] < remaps[b] for b in BASELINES)
    acceptance_line(7, ok, f"{suspensions} pailam suspensions; node re-mappings " + " ".join(f"{a}={v}" for a, v in remaps.items()))
    assert ok


def test_criterion_08_search_depth(campaign):
    acc = {2: [], 4: [], 8: []}
    runtime = {2: 0, 4: 0, 8: 0}
    for seed in SEEDS:
        acc[2].append(campaign["pailam", seed]["summary"]["intent_acceptance"])
        runtime[2] += campaign["pailam", seed]["total_ns"]
        sc = build_scenario(seed, **LOAD)
        for d in (4, 8):
            s = simulate(sc, "pailam", seed, d=d).ledger.summary()
            acc[d].append(s["intent_acceptance"])
            runtime[d] += s["timing"]["pailam"]["total_ns"]
    mean = {d: statistics.mean(v) for d, v in acc.items()}
    ok = mean[4] >= mean[2] - 0.02 and mean[8] <= mean[4] + 0.02 and runtime[4] > runtime[2]
    acceptance_line(
        8, ok,
        "mean acceptance " + " ".join(f"d={d}:{v:.4f}" for d, v in mean.items())
        + "; total runtime s " + " ".join(f"d={d}:{v / 1e9:.2f}" for d, v in runtime.items()),
    )
    assert ok


# lifecycle edges as drawn: install outcomes, suspension and recompilation,
# reinstallation of failed intents, withdrawal, resubmission and deletion
EXPECTED_EDGES = {
    ("Ready", "install_ok"): "Active",
    ("Ready", "install_fail"): "Failed",
    ("Active", "topology_update"): "Suspending",
    ("Suspending", "recompile_ok"): "Active",
    ("Suspending", "recompile_fail"): "Failed",
    ("Failed", "recompile_ok"): "Active",
    ("Failed", "recompile_fail"): "Failed",
    ("Active", "withdraw"): "Withdrawn",
    ("Failed", "withdraw"): "Withdrawn",
    ("Withdrawn", "resubmit"): "Ready",
    ("Withdrawn", "delete"): "Terminated",
}


def test_criterion_09_lifecycle():
    succeeded = {}
    pairs = 0
    for state, event in product(LifecycleState, LifecycleEvent):
        pairs += 1
        intent = Intent("x", Priority.HIGH, [make_request("x/r0", [("a", 1, 1)], [])], state=state)
        try:
            succeeded[state.value, event.value] = transition(intent, event).value
        except IllegalTransition:
            assert intent.state is state
    table_ok = succeeded == EXPECTED_EDGES and {(s.value, e.value): t.value for (s, e), t in TRANSITIONS.items()} == EXPECTED_EDGES

    # retry bound: random event walks and a real run's event log
    rng = np.random.default_rng(9)
    events = list(LifecycleEvent)
    worst = 0
    for _ in range(2000):
        intent = Intent("x", Priority.HIGH, [make_request("x/r0", [("a", 1, 1)], [])])
        for idx in rng.integers(len(events), size=30):
            try:
                transition(intent, events[idx])
            except IllegalTransition:
                pass
            worst = max(worst, intent.retry_count)
    res = simulate(build_scenario(1, k=50, n_vehicles=300), "pailam", 1)
    streak: dict[str, int] = {}
    for ev in res.events:
        if ev["event"] in ("install_fail", "recompile_fail"):
            streak[ev["intent"]] = streak.get(ev["intent"], 0) + 1
            worst = max(worst, streak[ev["intent"]])
        elif ev["state_after"] == "Active":
            streak[ev["intent"]] = 0
    ok = pairs == len(LifecycleState) * len(LifecycleEvent) and table_ok and worst <= 3
    acceptance_line(9, ok, f"{pairs} (state, event) pairs, {len(succeeded)} legal edges as expected={table_ok}, max consecutive failures {worst}")
    assert ok


def test_criterion_10_determinism(tmp_path):
    from vecintent.cli import main

    args = ["run", "--algo", "all", "--seeds", "1..10", "--stations", "120", "--edge-servers", "15",
            "--vehicles", "40", "--duration-s", "1800"]
    outs = []
    for name in ("a", "b"):
        assert main([*args, "--out", str(tmp_path / name)]) == 0
        csv_text = (tmp_path / name / "metrics.csv").read_text().splitlines()
        col = csv_text[0].split(",").index("embed_ns")
        stripped = [",".join(c for i, c in enumerate(row.split(",")) if i != col) for row in csv_text]
        outs.append((stripped, (tmp_path / name / "summary.json").read_bytes()))
    ok = outs[0] == outs[1]
    n_rows = len(outs[0][0]) - 1
    acceptance_line(10, ok, f"metrics CSV ({n_rows} rows, timing column dropped) and summary JSON byte-identical across two runs")
    assert ok

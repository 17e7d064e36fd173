import json
from decimal import Decimal

import numpy as np
import pytest

from vecintent.scenario import (
    EventTimeline,
    GpsFix,
    Scenario,
    WirelessModel,
    WorkloadParams,
    access_link,
    build_scenario,
    delaunay_edges,
    generate_topology,
    kmeans,
    project,
    read_trace_csv,
    synth_stations,
    synth_trace,
    trace_to_events,
    unproject,
    wired_delay,
    wireless_rate,
    write_trace_csv,
)
from vecintent.substrate import SubstrateNetwork, TopologyError

CENTER = (31.2304, 121.4737)


def test_wired_delay_goldens():
    assert wired_delay(10) == Decimal("0.05")
    assert wired_delay(Decimal("6.6852")) == Decimal("0.033426")
    with pytest.raises(ValueError):
        wired_delay(0)


def test_wireless_rate_as_written():
    assert wireless_rate(1.0) == pytest.approx(20 * np.log2(0.5 * 127 / 2e-13))
    assert wireless_rate(1.0) == pytest.approx(963.4, abs=0.1)
    assert wireless_rate(1.0, mode="db") < wireless_rate(0.1, mode="db")
    with pytest.raises(ValueError):
        wireless_rate(-1)


def test_access_link_delay_from_payload():
    bw, delay = access_link(1.0)
    assert bw == Decimal(repr(wireless_rate(1.0))).quantize(Decimal("0.000001"))
    assert delay == (Decimal(12000) / (Decimal(repr(wireless_rate(1.0))) * 1000)).quantize(Decimal("1e-9"))
    assert access_link(1.0, WirelessModel(constant_delay_ms=2.5))[1] == Decimal("2.5")


def test_projection_round_trip():
    lat = np.array([31.0, 31.3]), np.array([121.2, 121.6])
    back = unproject(project(*lat, CENTER), CENTER)
    assert np.allclose(back[0], lat[0]) and np.allclose(back[1], lat[1])


def test_kmeans_k_equals_n_returns_points():
    pts = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]])
    centers, labels = kmeans(pts, 4, np.random.default_rng(0))
    assert sorted(map(tuple, centers)) == sorted(map(tuple, pts))
    assert sorted(labels) == [0, 1, 2, 3]
    assert delaunay_edges(pts)  # triangulates


def test_collinear_and_oversized_k_rejected():
    with pytest.raises(TopologyError):
        delaunay_edges(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    st = synth_stations(10, 1)
    with pytest.raises(TopologyError):
        generate_topology(st, 11, 1)
    with pytest.raises(TopologyError):
        generate_topology([[31.0, 121.0], [31.1, 121.1], [31.2, 121.2]], 3, 1)


def test_generated_topology_properties():
    net = generate_topology(synth_stations(400, 3), 50, 3)
    assert len(net.edge_servers()) == 50 and net.is_connected()
    for l in net.links:
        length = Decimal(repr(float(np.hypot(*np.subtract(net.nodes[l.a].position, net.nodes[l.b].position)))))
        assert abs(l.delay - Decimal("0.005") * length) < Decimal("1e-8")
        assert 400 <= l.bandwidth_capacity <= 1000
    assert all(10 <= v.cpu_capacity <= 40 and 10 <= v.ram_capacity <= 80 for v in net.nodes.values())
    # planar triangulation: at most 3n - 6 links
    assert len(net.links) <= 3 * 50 - 6


def _two_servers():
    net = SubstrateNetwork()
    net.origin = CENTER
    net.add_node("e000", 10, 10, (0.0, 0.0))
    net.add_node("e001", 10, 10, (10.0, 0.0))
    net.add_link("e000", "e001", 500, Decimal("0.05"))
    return net


def _fix(v, t, x, y=0.0):
    lat, lon = unproject(np.array([[x, y]]), CENTER)
    return GpsFix(v, t, float(lat[0]), float(lon[0]))


def test_submit_and_withdraw_bins():
    net = _two_servers()
    tl = trace_to_events([_fix("a", 100, 1), _fix("a", 3500, 1)], net, seed=1)
    assert [s.intent_id for s in tl.intervals[1].submitted] == ["ia"]
    assert tl.intervals[58].withdrawn == ["ia"]
    assert not tl.problems()


def test_stationary_vehicle_never_suspends():
    net = _two_servers()
    fixes = [_fix("a", t, 1) for t in range(0, 600, 10)]
    tl = trace_to_events(fixes, net, WorkloadParams(location_ratio=1.0), seed=1)
    assert not any(b.suspended or b.moves for b in tl.intervals)


def test_single_boundary_crossing_suspends_once():
    net = _two_servers()
    fixes = [_fix("a", t, 1 + 8 * t / 600) for t in range(0, 610, 10)]
    tl = trace_to_events(fixes, net, WorkloadParams(location_ratio=1.0), seed=1)
    assert sum(len(b.suspended) for b in tl.intervals) == 1
    moves = [m for b in tl.intervals for m in b.moves]
    assert len(moves) == 1 and moves[0][:2] == ("ua", "e001")


def test_single_fix_submits_and_withdraws_together():
    net = _two_servers()
    tl = trace_to_events([_fix("a", 30, 1)], net, seed=1)
    assert tl.horizon == 1 and tl.intervals[0].withdrawn == ["ia"]
    assert trace_to_events([], net).horizon == 0


def test_synth_trace_determinism_and_edge_cases(tmp_path):
    net = generate_topology(synth_stations(60, 2), 10, 2)
    a = synth_trace(5, 600, net, 9)
    assert a == synth_trace(5, 600, net, 9)
    assert len(synth_trace(1, 0, net, 9)) == 1
    write_trace_csv(a, tmp_path / "t.csv")
    back = read_trace_csv(tmp_path / "t.csv")
    assert [(f.vehicle, f.timestamp) for f in back] == [(f.vehicle, f.timestamp) for f in a]


def test_arrivals_front_loaded():
    net = generate_topology(synth_stations(60, 2), 10, 2)
    fixes = synth_trace(1000, 3600, net, 5, step_s=600)
    first = {}
    for f in fixes:
        first.setdefault(f.vehicle, f.timestamp)
    starts = np.array(list(first.values()))
    assert (starts < 1800).mean() > 0.7


def test_scenario_hash_round_trip_and_tamper(tmp_path):
    sc = build_scenario(4, n_stations=80, k=10, n_vehicles=20, duration_s=900)
    path = tmp_path / "s.json"
    sc.save(path)
    again = Scenario.load(path)
    assert again.hash == sc.hash
    assert again.timeline.to_dict() == sc.timeline.to_dict()
    data = json.loads(path.read_text())
    data["topology"]["nodes"][0]["cpu"] += 1
    with pytest.raises(ValueError):
        Scenario.from_dict(data)


def test_build_scenario_is_deterministic():
    a = build_scenario(2, n_stations=80, k=10, n_vehicles=30, duration_s=1200)
    b = build_scenario(2, n_stations=80, k=10, n_vehicles=30, duration_s=1200)
    assert a.hash == b.hash
    assert build_scenario(3, n_stations=80, k=10, n_vehicles=30, duration_s=1200).hash != a.hash
    assert not a.timeline.problems()
    assert EventTimeline.from_dict(a.timeline.to_dict()).to_dict() == a.timeline.to_dict()

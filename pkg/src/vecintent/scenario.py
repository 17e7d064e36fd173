"""Topologies, mobility traces, delay models and the event timeline.

Edge servers sit at k-means centroids of base-station positions and are wired
by the Delaunay triangulation of those centroids. Vehicles become intents:
one intent per vehicle, submitted at its first fix and withdrawn at its last,
suspended whenever a vehicle with a pinned service changes nearest server.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError

from vecintent.engine import IntervalBatch, Submission
from vecintent.substrate import SubstrateNetwork, TopologyError, dumps_json, jsonable

__all__ = [
    "EARTH_RADIUS_KM",
    "TopologyRanges",
    "WorkloadParams",
    "WirelessModel",
    "GpsFix",
    "EventTimeline",
    "Scenario",
    "project",
    "unproject",
    "kmeans",
    "delaunay_edges",
    "generate_topology",
    "synth_stations",
    "wired_delay",
    "wireless_rate",
    "access_link",
    "read_trace_csv",
    "write_trace_csv",
    "read_stations_csv",
    "synth_trace",
    "trace_to_events",
    "build_scenario",
    "split_seeds",
]

EARTH_RADIUS_KM = 6371.0088
LENGTH_QUANTUM = Decimal("0.000001")
WIRED_MS_PER_KM = Decimal("0.005")


# ----------------------------------------------------------------- parameters
@dataclass
class TopologyRanges:
    cpu: tuple[int, int] = (10, 40)
    ram: tuple[int, int] = (10, 80)
    bw: tuple[int, int] = (400, 1000)


@dataclass
class WorkloadParams:
    requests: tuple[int, int] = (1, 4)
    vnodes: tuple[int, int] = (2, 4)
    vlinks: tuple[int, int] = (2, 4)
    vcpu: tuple[int, int] = (1, 2)
    vram: tuple[int, int] = (1, 4)
    vbw: tuple[int, int] = (1, 2)
    vdelay: tuple[int, int] = (10, 100)
    location_ratio: float = 0.1
    obu_cpu: int = 4
    obu_ram: int = 8
    priorities: tuple[str, ...] = ("high", "mid", "low")


@dataclass
class WirelessModel:
    """Vehicle-to-server link parameters (W in MHz, powers in watts)."""

    W: float = 20.0
    S: float = 0.5
    N: float = 2e-13
    mode: str = "verbatim"  # or "db"
    payload_bytes: int = 1500
    constant_delay_ms: float | None = None


def split_seeds(seed: int, n: int = 4) -> list[int]:
    """Independent sub-seeds (topology, trace, workload, algorithm) of ``seed``."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


# ------------------------------------------------------------------ geometry
def project(lat: np.ndarray, lon: np.ndarray, origin: tuple[float, float]) -> np.ndarray:
    """Equirectangular projection to km around ``origin`` (lat, lon)."""
    lat0, lon0 = map(math.radians, origin)
    x = EARTH_RADIUS_KM * (np.radians(lon) - lon0) * math.cos(lat0)
    y = EARTH_RADIUS_KM * (np.radians(lat) - lat0)
    return np.column_stack([x, y])


def unproject(xy: np.ndarray, origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    lat0, lon0 = map(math.radians, origin)
    xy = np.atleast_2d(xy)
    lat = np.degrees(xy[:, 1] / EARTH_RADIUS_KM + lat0)
    lon = np.degrees(xy[:, 0] / (EARTH_RADIUS_KM * math.cos(lat0)) + lon0)
    return lat, lon


def kmeans(
    points: np.ndarray, k: int, rng: np.random.Generator, tol: float = 1e-4, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations from a k-means++ seeding; returns (centroids, labels).

    Stops once the relative inertia change drops below ``tol``.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise ValueError("fewer distinct points than clusters")
        idx = rng.choice(n, p=d2 / total)
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    C = np.array(centers)
    prev = None
    for _ in range(max_iter):
        dist = ((points[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        inertia = float(dist[np.arange(n), labels].sum())
        for j in range(k):
            members = points[labels == j]
            if len(members):
                C[j] = members.mean(axis=0)
        if prev is not None and (prev == 0 or abs(prev - inertia) / prev < tol):
            break
        prev = inertia
    dist = ((points[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return C, dist.argmin(axis=1)


def delaunay_edges(xy: np.ndarray) -> list[tuple[int, int]]:
    xy = np.asarray(xy, dtype=float)
    if len(xy) < 3 or np.linalg.matrix_rank(xy - xy.mean(axis=0), tol=1e-9) < 2:
        raise TopologyError("points are collinear or too few for a triangulation")
    try:
        tri = Delaunay(xy)
    except QhullError as exc:
        raise TopologyError(f"triangulation failed: {exc}") from exc
    edges = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = sorted((int(simplex[i]), int(simplex[(i + 1) % 3])))
            edges.add((a, b))
    return sorted(edges)


# ------------------------------------------------------------------ delays
def wired_delay(length_km: Any) -> Decimal:
    """Propagation delay in ms of a fibre of ``length_km``."""
    d = Decimal(str(length_km)) if not isinstance(length_km, Decimal) else length_km
    if d <= 0:
        raise ValueError("length must be positive")
    return WIRED_MS_PER_KM * d


def wireless_rate(distance_km: float, W: float = 20.0, S: float = 0.5, N: float = 2e-13, mode: str = "verbatim") -> float:
    """Vehicle uplink rate, ``W * log2(S g / N)`` with ``g = 127 + 30 log10 d``.

    ``mode="db"`` reads the gain term as a path loss in dB instead and uses
    Shannon's ``log2(1 + SNR)``.
    """
    if distance_km <= 0:
        raise ValueError("distance must be positive")
    d = max(distance_km, 0.001)
    if mode == "verbatim":
        g = 127.0 + 30.0 * math.log10(d)
        return W * math.log2(S * g / N)
    if mode == "db":
        g = 10 ** (-(127.0 + 30.0 * math.log10(d)) / 10)
        return W * math.log2(1 + S * g / N)
    raise ValueError(f"unknown wireless mode {mode!r}")


def access_link(distance_km: float, model: WirelessModel | None = None) -> tuple[Decimal, Decimal]:
    """(bandwidth Mbps, delay ms) of a vehicle attachment at ``distance_km``."""
    model = model or WirelessModel()
    rate = wireless_rate(max(distance_km, 0.001), model.W, model.S, model.N, model.mode)
    bw = Decimal(repr(rate)).quantize(LENGTH_QUANTUM)
    if model.constant_delay_ms is not None:
        delay = Decimal(repr(float(model.constant_delay_ms)))
    else:
        delay = Decimal(model.payload_bytes * 8) / (Decimal(repr(rate)) * 1000)
        delay = max(delay.quantize(Decimal("1e-9")), Decimal("1e-9"))
    return bw, delay


# ---------------------------------------------------------------- topology
def synth_stations(n: int, seed: int, center: tuple[float, float] = (31.2304, 121.4737), span_km: float = 40.0) -> np.ndarray:
    """Clustered synthetic base stations (lat, lon) around ``center``."""
    rng = np.random.default_rng(seed)
    hubs = rng.uniform(-span_km / 2, span_km / 2, size=(max(3, n // 40), 2))
    xy = hubs[rng.integers(len(hubs), size=n)] + rng.normal(0, span_km / 10, size=(n, 2))
    xy = np.clip(xy, -span_km / 2, span_km / 2)
    lat, lon = unproject(xy, center)
    return np.round(np.column_stack([lat, lon]), 6)


def generate_topology(
    stations: Sequence[Sequence[float]],
    k: int,
    seed: int,
    ranges: TopologyRanges | None = None,
) -> SubstrateNetwork:
    """Edge servers at k-means centroids of ``stations`` (lat, lon), Delaunay links."""
    ranges = ranges or TopologyRanges()
    st = np.asarray(stations, dtype=float)
    if st.ndim != 2 or st.shape[1] != 2:
        raise TopologyError("stations must be (lat, lon) pairs")
    if k < 3 or k > len(st):
        raise TopologyError(f"need 3 <= k <= {len(st)} stations, got k={k}")
    origin = (float(st[:, 0].mean()), float(st[:, 1].mean()))
    xy = project(st[:, 0], st[:, 1], origin)
    rng = np.random.default_rng(seed)
    try:
        centers, _ = kmeans(xy, k, rng)
    except ValueError as exc:
        raise TopologyError(str(exc)) from exc
    edges = delaunay_edges(centers)
    net = SubstrateNetwork()
    net.origin = origin
    ids = [f"e{i:03d}" for i in range(k)]
    for i, nid in enumerate(ids):
        net.add_node(
            nid,
            int(rng.integers(ranges.cpu[0], ranges.cpu[1] + 1)),
            int(rng.integers(ranges.ram[0], ranges.ram[1] + 1)),
            (round(float(centers[i, 0]), 6), round(float(centers[i, 1]), 6)),
        )
    for a, b in edges:
        pa, pb = net.nodes[ids[a]].position, net.nodes[ids[b]].position
        length = Decimal(repr(math.dist(pa, pb))).quantize(LENGTH_QUANTUM)
        length = max(length, LENGTH_QUANTUM)
        net.add_link(ids[a], ids[b], int(rng.integers(ranges.bw[0], ranges.bw[1] + 1)), wired_delay(length))
    if not net.is_connected():
        raise TopologyError("generated topology is not connected")
    return net


def link_length(net: SubstrateNetwork, a: str, b: str) -> float:
    return math.dist(net.nodes[a].position, net.nodes[b].position)


# ------------------------------------------------------------------- traces
@dataclass(frozen=True, order=True)
class GpsFix:
    vehicle: str
    timestamp: int
    lat: float
    lon: float


def read_trace_csv(path: str | Path) -> list[GpsFix]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"vehicle_id", "timestamp", "lat", "lon"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"trace header must contain {sorted(need)}")
        out = [
            GpsFix(row["vehicle_id"], int(float(row["timestamp"])), float(row["lat"]), float(row["lon"]))
            for row in reader
        ]
    return sorted(out)


def write_trace_csv(fixes: Iterable[GpsFix], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle_id", "timestamp", "lat", "lon"])
        for f in fixes:
            w.writerow([f.vehicle, f.timestamp, f"{f.lat:.6f}", f"{f.lon:.6f}"])


def read_stations_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"lat", "lon"} <= set(reader.fieldnames):
            raise ValueError("station header must contain lat,lon")
        rows = [(float(r["lat"]), float(r["lon"])) for r in reader]
    if not rows:
        raise ValueError("station file is empty")
    return np.array(rows)


def synth_trace(
    n_vehicles: int,
    duration_s: int,
    net: SubstrateNetwork,
    seed: int,
    *,
    speed_kmh: tuple[float, float] = (20.0, 60.0),
    step_s: int = 10,
    arrival: tuple[float, float] = (1.2, 3.0),
    stay: tuple[float, float] = (0.25, 1.0),
) -> list[GpsFix]:
    """Random-waypoint taxis over the bounding box of the edge servers.

    Arrival times follow a Beta(a, b) profile over the horizon (front loaded
    by default); each vehicle stays for a U[stay] fraction of the horizon.
    """
    if n_vehicles < 1:
        raise ValueError("need at least one vehicle")
    if net.origin is None:
        raise ValueError("topology has no geographic origin")
    rng = np.random.default_rng(seed)
    pos = np.array([net.nodes[n].position for n in net.edge_servers()])
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    fixes: list[GpsFix] = []
    for i in range(n_vehicles):
        vid = f"taxi{i + 1:04d}"
        start = int(rng.beta(*arrival) * duration_s) // step_s * step_s if duration_s > 0 else 0
        dwell = rng.uniform(*stay) * duration_s
        end = min(max(duration_s - 1, 0), int(start + dwell))
        here = rng.uniform(lo, hi)
        goal = rng.uniform(lo, hi)
        speed = rng.uniform(*speed_kmh) / 3600.0  # km/s
        track = []
        ts = start
        while True:
            track.append((ts, here.copy()))
            if ts + step_s > end:
                break
            budget = speed * step_s
            while budget > 0:
                gap = float(np.linalg.norm(goal - here))
                if gap > budget:
                    here = here + (goal - here) * (budget / gap)
                    budget = 0.0
                else:
                    here = goal
                    budget -= gap
                    goal = rng.uniform(lo, hi)
                    speed = rng.uniform(*speed_kmh) / 3600.0
            ts += step_s
        lat, lon = unproject(np.array([p for _, p in track]), net.origin)
        for (ts, _), la, lo_ in zip(track, lat, lon):
            fixes.append(GpsFix(vid, int(ts), round(float(la), 6), round(float(lo_), 6)))
    return sorted(fixes)


# ---------------------------------------------------------------- timeline
@dataclass
class EventTimeline:
    intervals: list[IntervalBatch] = field(default_factory=list)
    interval_s: int = 60

    @property
    def horizon(self) -> int:
        return len(self.intervals)

    def to_dict(self) -> dict[str, Any]:
        return {"interval_s": self.interval_s, "intervals": [jsonable(asdict(b)) for b in self.intervals]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EventTimeline":
        out = []
        for b in data["intervals"]:
            out.append(
                IntervalBatch(
                    t=int(b["t"]),
                    submitted=[Submission(**s) for s in b["submitted"]],
                    suspended=list(b["suspended"]),
                    withdrawn=list(b["withdrawn"]),
                    failed_retry=list(b.get("failed_retry", [])),
                    moves=[tuple(m) for m in b["moves"]],
                )
            )
        return cls(out, int(data.get("interval_s", 60)))

    def problems(self) -> list[str]:
        """Well-formedness defects: events outside [submit, withdraw], duplicates."""
        out = []
        submit: dict[str, int] = {}
        withdraw: dict[str, int] = {}
        for b in self.intervals:
            for s in b.submitted:
                if s.intent_id in submit:
                    out.append(f"{s.intent_id} submitted twice")
                submit[s.intent_id] = b.t
            for i in b.withdrawn:
                if i in withdraw:
                    out.append(f"{i} withdrawn twice")
                withdraw[i] = b.t
        for b in self.intervals:
            for i in b.suspended:
                if i not in submit or b.t < submit[i] or (i in withdraw and b.t > withdraw[i]):
                    out.append(f"{i} suspended at {b.t} outside its lifetime")
        for i, w in withdraw.items():
            if i not in submit or w < submit[i]:
                out.append(f"{i} withdrawn before submission")
        return out


def _nearest(xy: np.ndarray, servers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = np.sqrt(((xy[:, None, :] - servers[None, :, :]) ** 2).sum(axis=2))
    idx = d.argmin(axis=1)
    return idx, d[np.arange(len(xy)), idx]


def _virtual_graph(rng: np.random.Generator, p: WorkloadParams) -> tuple[int, list[tuple[int, int]]]:
    n = int(rng.integers(p.vnodes[0], p.vnodes[1] + 1))
    want = int(rng.integers(p.vlinks[0], p.vlinks[1] + 1))
    want = min(max(want, n - 1), n * (n - 1) // 2)
    order = rng.permutation(n)
    links = set()
    for i in range(1, n):  # random spanning tree keeps the request connected
        j = int(rng.integers(i))
        links.add(tuple(sorted((int(order[i]), int(order[j])))))
    spare = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in links]
    for idx in rng.permutation(len(spare))[: want - len(links)]:
        links.add(spare[int(idx)])
    return n, sorted(links)


def _manifest(rng: np.random.Generator, p: WorkloadParams, user: str) -> tuple[dict[str, Any], bool]:
    priority = p.priorities[int(rng.integers(len(p.priorities)))]
    pinned = False
    requests = []
    for _ in range(int(rng.integers(p.requests[0], p.requests[1] + 1))):
        n, links = _virtual_graph(rng, p)
        pin_at = int(rng.integers(n)) if rng.random() < p.location_ratio else None
        nodes = []
        for v in range(n):
            rec: dict[str, Any] = {
                "id": f"v{v}",
                "cpu": int(rng.integers(p.vcpu[0], p.vcpu[1] + 1)),
                "ram": int(rng.integers(p.vram[0], p.vram[1] + 1)),
            }
            if v == pin_at:
                rec["pin"] = {"type": "mobile", "node": user}
                pinned = True
            nodes.append(rec)
        requests.append(
            {
                "nodes": nodes,
                "links": [
                    {
                        "a": f"v{a}",
                        "b": f"v{b}",
                        "bw_mbps": int(rng.integers(p.vbw[0], p.vbw[1] + 1)),
                        "delay_ms": int(rng.integers(p.vdelay[0], p.vdelay[1] + 1)),
                    }
                    for a, b in links
                ],
            }
        )
    return {"priority": priority, "requests": requests}, pinned


def trace_to_events(
    fixes: Iterable[GpsFix],
    net: SubstrateNetwork,
    params: WorkloadParams | None = None,
    seed: int = 0,
    interval_s: int = 60,
) -> EventTimeline:
    """One intent per vehicle; moves and suspensions from nearest-server changes."""
    params = params or WorkloadParams()
    if interval_s <= 0:
        raise ValueError("interval length must be positive")
    by_vehicle: dict[str, list[GpsFix]] = {}
    for f in fixes:
        by_vehicle.setdefault(f.vehicle, []).append(f)
    if not by_vehicle:
        return EventTimeline([], interval_s)
    if net.origin is None:
        raise ValueError("topology has no geographic origin")
    servers = net.edge_servers()
    spos = np.array([net.nodes[s].position for s in servers])
    rng = np.random.default_rng(seed)
    batches: dict[int, IntervalBatch] = {}

    def batch(t: int) -> IntervalBatch:
        if t not in batches:
            batches[t] = IntervalBatch(t)
        return batches[t]

    for vid in sorted(by_vehicle):
        track = sorted(by_vehicle[vid], key=lambda f: (f.timestamp, f.lat, f.lon))
        bins: dict[int, GpsFix] = {}
        for f in track:
            bins[f.timestamp // interval_s] = f  # last fix of each bin
        keys = sorted(bins)
        xy = project(np.array([bins[k].lat for k in keys]), np.array([bins[k].lon for k in keys]), net.origin)
        idx, dist = _nearest(xy, spos)
        t0, t1 = keys[0], track[-1].timestamp // interval_s
        iid, user = f"i{vid}", f"u{vid}"
        manifest, pinned = _manifest(rng, params, user)
        sub = Submission(iid, manifest, vid)
        if pinned:
            sub.server = servers[int(idx[0])]
            sub.distance_km = round(float(dist[0]), 6)
        batch(t0).submitted.append(sub)
        batch(t1).withdrawn.append(iid)
        if pinned:
            current = int(idx[0])
            for j, t in enumerate(keys[1:], start=1):
                if t >= t1:
                    break
                if int(idx[j]) != current:
                    current = int(idx[j])
                    batch(t).moves.append((user, servers[current], round(float(dist[j]), 6)))
                    batch(t).suspended.append(iid)
    horizon = max(batches) + 1
    return EventTimeline([batches.get(t, IntervalBatch(t)) for t in range(horizon)], interval_s)


# ---------------------------------------------------------------- scenario
def _canonical(obj: Any) -> Any:
    """JSON-ready copy whose numbers print the same whether loaded as float or Decimal."""
    obj = jsonable(obj)
    if isinstance(obj, float):
        return int(obj) if obj.is_integer() else obj
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_canonical(v) for v in obj]
    return obj


@dataclass
class Scenario:
    topology: SubstrateNetwork
    timeline: EventTimeline
    meta: dict[str, Any] = field(default_factory=dict)
    wireless: WirelessModel = field(default_factory=WirelessModel)
    obu: tuple[int, int] = (4, 8)

    def content(self) -> dict[str, Any]:
        return {
            "topology": self.topology.to_dict(),
            "timeline": self.timeline.to_dict(),
            "wireless": asdict(self.wireless),
            "obu": list(self.obu),
        }

    @property
    def hash(self) -> str:
        blob = json.dumps(_canonical(self.content()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict[str, Any]:
        return {**self.content(), "meta": self.meta, "hash": self.hash}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(dumps_json(self.to_dict(), sort_keys=True))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        raw = dict(data.get("wireless", {}))
        for key in ("W", "S", "N", "constant_delay_ms"):
            if raw.get(key) is not None:
                raw[key] = float(raw[key])
        if "payload_bytes" in raw:
            raw["payload_bytes"] = int(raw["payload_bytes"])
        wireless = WirelessModel(**raw)
        sc = cls(
            SubstrateNetwork.from_dict(data["topology"]),
            EventTimeline.from_dict(data["timeline"]),
            dict(data.get("meta", {})),
            wireless,
            tuple(int(x) for x in data.get("obu", (4, 8))),
        )
        if "hash" in data and data["hash"] != sc.hash:
            raise ValueError("scenario content does not match its recorded hash")
        return sc

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(), parse_float=Decimal))


def build_scenario(
    seed: int,
    *,
    n_stations: int = 400,
    k: int = 50,
    n_vehicles: int = 150,
    duration_s: int = 3600,
    interval_s: int = 60,
    stations: np.ndarray | None = None,
    fixes: list[GpsFix] | None = None,
    ranges: TopologyRanges | None = None,
    params: WorkloadParams | None = None,
    wireless: WirelessModel | None = None,
    topology: SubstrateNetwork | None = None,
    stay: tuple[float, float] = (0.25, 1.0),
) -> Scenario:
    """Synthetic (or file-backed) scenario from one master seed."""
    s_topo, s_trace, s_work, s_algo = split_seeds(seed)
    if topology is not None:
        net = topology.copy()
    else:
        if stations is None:
            stations = synth_stations(n_stations, s_topo)
        net = generate_topology(stations, k, s_topo, ranges)
    if fixes is None:
        fixes = synth_trace(n_vehicles, duration_s, net, s_trace, stay=stay)
    params = params or WorkloadParams()
    timeline = trace_to_events(fixes, net, params, s_work, interval_s)
    meta = {
        "seed": seed,
        "sub_seeds": {"topology": s_topo, "trace": s_trace, "workload": s_work, "algorithm": s_algo},
        "k": len(net.edge_servers()),
        "vehicles": len({f.vehicle for f in fixes}),
        "interval_s": interval_s,
    }
    return Scenario(net, timeline, meta, wireless or WirelessModel(), (params.obu_cpu, params.obu_ram))

"""Run configuration with validation; defaults follow the reference setup."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

__all__ = ["ConfigError", "RunConfig", "parse_seeds", "FIELD_HELP"]


class ConfigError(ValueError):
    pass


FIELD_HELP = {
    "algos": "embedders to run: pailam, grcrank, rwrank, nrmrank (default: pailam)",
    "seeds": "master seeds, e.g. [1, 2] (default: [1])",
    "k_paths": "candidate shortest paths per virtual link (default 5)",
    "d": "search range coefficient (default 2)",
    "mu": "delay coefficient in ms (default 10)",
    "retry_threshold": "reinstallation attempts of a failed intent (default 3)",
    "alpha": "cpu weight of the cost model (default 1)",
    "beta": "ram weight of the cost model (default 1)",
    "gamma": "link weight of the cost model (default 1)",
    "location_ratio": "fraction of requests pinned to their vehicle (default 0.1)",
    "interval_s": "interval length in trace seconds (default 60)",
    "max_requests": "largest number of requests per intent (default 4)",
    "edge_servers": "edge servers (k-means clusters) of synthetic topologies (default 50)",
    "stations": "synthetic base stations (default 400)",
    "vehicles": "synthetic vehicles (default 150)",
    "duration_s": "synthetic trace length in seconds (default 3600)",
    "node_cpu": "edge server cpu range (default [10, 40])",
    "node_ram": "edge server ram range (default [10, 80])",
    "link_bw": "wired link bandwidth range in Mbps (default [400, 1000])",
    "req_num": "requests per intent (default [1, 4])",
    "vnodes": "virtual nodes per request (default [2, 4])",
    "vlinks": "virtual links per request (default [2, 4])",
    "vcpu": "virtual cpu range (default [1, 2])",
    "vram": "virtual ram range (default [1, 4])",
    "vbw": "virtual bandwidth range in Mbps (default [1, 2])",
    "vdelay": "virtual delay budget range in ms (default [10, 100])",
    "wireless_mode": "wireless rate model: verbatim or db (default verbatim)",
    "payload_bytes": "payload used to turn the wireless rate into a delay (default 1500)",
    "access_delay_ms": "constant vehicle access delay overriding the rate model (default none)",
    "topology": "topology JSON file (default: synthesise)",
    "scenario": "scenario JSON file (default: synthesise per seed)",
    "trace": "trace CSV vehicle_id,timestamp,lat,lon (default: synthesise)",
    "station_file": "station CSV lat,lon (default: synthesise)",
    "workers": "parallel worker processes (default 1)",
}


def parse_seeds(text: str | list | int) -> list[int]:
    """``"1..10"``, ``"1,3,5"`` or a list of ints."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(s) for s in text]
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            if int(hi) < int(lo):
                raise ConfigError(f"empty seed range {part!r}")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError("no seeds given")
    return out


def _range(v: Any, name: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a [lo, hi] pair") from exc
    if lo > hi or lo < 0:
        raise ConfigError(f"{name} must satisfy 0 <= lo <= hi")
    return lo, hi


@dataclass
class RunConfig:
    algos: list[str] = field(default_factory=lambda: ["pailam"])
    seeds: list[int] = field(default_factory=lambda: [1])
    k_paths: int = 5
    d: int = 2
    mu: float = 10
    retry_threshold: int = 3
    alpha: float = 1
    beta: float = 1
    gamma: float = 1
    location_ratio: float = 0.1
    interval_s: int = 60
    max_requests: int = 4
    edge_servers: int = 50
    stations: int = 400
    vehicles: int = 150
    duration_s: int = 3600
    node_cpu: tuple[int, int] = (10, 40)
    node_ram: tuple[int, int] = (10, 80)
    link_bw: tuple[int, int] = (400, 1000)
    req_num: tuple[int, int] = (1, 4)
    vnodes: tuple[int, int] = (2, 4)
    vlinks: tuple[int, int] = (2, 4)
    vcpu: tuple[int, int] = (1, 2)
    vram: tuple[int, int] = (1, 4)
    vbw: tuple[int, int] = (1, 2)
    vdelay: tuple[int, int] = (10, 100)
    wireless_mode: str = "verbatim"
    payload_bytes: int = 1500
    access_delay_ms: float | None = None
    topology: str | None = None
    scenario: str | None = None
    trace: str | None = None
    station_file: str | None = None
    workers: int = 1

    def validate(self) -> "RunConfig":
        from vecintent.simulation import ALGOS

        if not self.algos or any(a not in ALGOS for a in self.algos):
            raise ConfigError(f"algos must be drawn from {ALGOS}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for name in ("k_paths", "d", "interval_s", "max_requests", "workers", "payload_bytes"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.retry_threshold < 0:
            raise ConfigError("retry_threshold must be >= 0")
        if self.mu <= 0:
            raise ConfigError("mu must be positive")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0 <= self.location_ratio <= 1:
            raise ConfigError("location_ratio must lie in [0, 1]")
        if self.edge_servers < 3 or self.stations < self.edge_servers:
            raise ConfigError("need 3 <= edge_servers <= stations")
        if self.vehicles < 1 or self.duration_s < 0:
            raise ConfigError("vehicles >= 1 and duration_s >= 0 required")
        for name in ("node_cpu", "node_ram", "link_bw", "req_num", "vnodes", "vlinks", "vcpu", "vram", "vbw", "vdelay"):
            setattr(self, name, _range(getattr(self, name), name))
        if self.vnodes[0] < 1 or self.req_num[0] < 1 or min(self.vcpu[0], self.vram[0], self.vbw[0], self.vdelay[0]) < 1:
            raise ConfigError("virtual demands and counts must be >= 1")
        if self.req_num[1] > self.max_requests:
            raise ConfigError("req_num upper bound exceeds max_requests")
        if self.wireless_mode not in ("verbatim", "db"):
            raise ConfigError("wireless_mode must be verbatim or db")
        if self.access_delay_ms is not None and self.access_delay_ms <= 0:
            raise ConfigError("access_delay_ms must be positive")
        return self

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        data = dict(data)
        if "seeds" in data:
            data["seeds"] = parse_seeds(data["seeds"])
        if isinstance(data.get("algos"), str):
            data["algos"] = [data["algos"]]
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    # ------------------------------------------------------------ bridges
    def sim_kwargs(self) -> dict[str, Any]:
        return dict(
            k=self.k_paths,
            d=self.d,
            mu=self.mu,
            retry_threshold=self.retry_threshold,
            weights=(self.alpha, self.beta, self.gamma),
            max_requests=self.max_requests,
        )

    def workload(self):
        from vecintent.scenario import WorkloadParams

        return WorkloadParams(
            requests=self.req_num, vnodes=self.vnodes, vlinks=self.vlinks, vcpu=self.vcpu, vram=self.vram,
            vbw=self.vbw, vdelay=self.vdelay, location_ratio=self.location_ratio,
        )

    def ranges(self):
        from vecintent.scenario import TopologyRanges

        return TopologyRanges(cpu=self.node_cpu, ram=self.node_ram, bw=self.link_bw)

    def wireless(self):
        from vecintent.scenario import WirelessModel

        return WirelessModel(mode=self.wireless_mode, payload_bytes=self.payload_bytes,
                             constant_delay_ms=self.access_delay_ms)

"""Command line front end: generate topologies and scenarios, run, validate, report.

Exit codes: 0 ok, 2 usage, 3 config, 4 file I/O, 5 topology, 6 validation
violations, 7 scenario hash mismatch. Errors go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal
from pathlib import Path
from typing import Any, Sequence

from vecintent.config import FIELD_HELP, ConfigError, RunConfig, parse_seeds
from vecintent.metrics import CSV_COLUMNS, merge, timing_summary
from vecintent.scenario import (
    Scenario,
    build_scenario,
    generate_topology,
    read_stations_csv,
    read_trace_csv,
    split_seeds,
    synth_stations,
    synth_trace,
    trace_to_events,
)
from vecintent.simulation import ALGOS, simulate
from vecintent.substrate import SubstrateNetwork, TopologyError, dumps_json
from vecintent.validate import HashMismatch, validate_dump

log = logging.getLogger("vecintent")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO, EXIT_TOPOLOGY, EXIT_VIOLATIONS, EXIT_HASH = 0, 2, 3, 4, 5, 6, 7


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.kind = kind


def _load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(), parse_float=Decimal)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, "io", f"{path} is not valid JSON: {exc}") from exc


def _write(path: str | Path, text: str) -> str:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc.strerror or exc}") from exc
    return str(p)


# ------------------------------------------------------------------ config
_LIST_FIELDS = {"node_cpu", "node_ram", "link_bw", "req_num", "vnodes", "vlinks", "vcpu", "vram", "vbw", "vdelay"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--algo", action="append", choices=ALGOS + ("all",), help=FIELD_HELP["algos"])
    p.add_argument("--seeds", help=FIELD_HELP["seeds"] + "; accepts 1..10 or 1,2,3")
    for name, kind in (
        ("k_paths", int), ("d", int), ("mu", float), ("retry_threshold", int), ("alpha", float), ("beta", float),
        ("gamma", float), ("location_ratio", float), ("interval_s", int), ("max_requests", int),
        ("edge_servers", int), ("stations", int), ("vehicles", int), ("duration_s", int),
        ("payload_bytes", int), ("access_delay_ms", float), ("workers", int),
    ):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, help=FIELD_HELP[name])
    for name in sorted(_LIST_FIELDS):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=int, nargs=2, metavar=("LO", "HI"),
                       help=FIELD_HELP[name])
    p.add_argument("--wireless-mode", dest="wireless_mode", choices=("verbatim", "db"), help=FIELD_HELP["wireless_mode"])
    p.add_argument("--topology", help=FIELD_HELP["topology"])
    p.add_argument("--scenario", help=FIELD_HELP["scenario"])
    p.add_argument("--trace", help=FIELD_HELP["trace"])
    p.add_argument("--stations-file", dest="station_file", help=FIELD_HELP["station_file"])


def resolve_config(args: argparse.Namespace) -> RunConfig:
    try:
        cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read config: {exc}") from exc
    data = cfg.to_dict()
    for name in data:
        value = getattr(args, name, None)
        if value is not None and name not in ("algos", "seeds"):
            data[name] = value
    if getattr(args, "algo", None):
        data["algos"] = list(ALGOS) if "all" in args.algo else list(dict.fromkeys(args.algo))
    if getattr(args, "seeds", None):
        data["seeds"] = parse_seeds(args.seeds)
    return RunConfig.from_dict(data).validate()


# --------------------------------------------------------------- commands
def cmd_gen_topology(args: argparse.Namespace) -> int:
    if args.stations:
        try:
            stations = read_stations_csv(args.stations)
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot read {args.stations}: {exc}") from exc
        except ValueError as exc:
            raise CliError(EXIT_IO, "io", str(exc)) from exc
    else:
        stations = synth_stations(args.n_stations, split_seeds(args.seed)[0])
    net = generate_topology(stations, args.k, args.seed)
    print(_write(args.out, dumps_json(net.to_dict(), indent=1)))
    return EXIT_OK


def _scenario_for(cfg: RunConfig, seed: int) -> Scenario:
    topology = SubstrateNetwork.from_dict(_load_json(cfg.topology)) if cfg.topology else None
    try:
        stations = read_stations_csv(cfg.station_file) if cfg.station_file else None
        fixes = read_trace_csv(cfg.trace) if cfg.trace else None
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read input CSV: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_IO, "io", str(exc)) from exc
    return build_scenario(
        seed,
        n_stations=cfg.stations,
        k=cfg.edge_servers,
        n_vehicles=cfg.vehicles,
        duration_s=cfg.duration_s,
        interval_s=cfg.interval_s,
        stations=stations,
        fixes=fixes,
        ranges=cfg.ranges(),
        params=cfg.workload(),
        wireless=cfg.wireless(),
        topology=topology,
    )


def cmd_gen_scenario(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.synth is not None:
        if args.trace:
            raise CliError(EXIT_USAGE, "usage", "--synth and --trace are mutually exclusive")
        cfg.vehicles = args.synth
        cfg.trace = None
    sc = _scenario_for(cfg, args.seed)
    sc.meta["config"] = cfg.to_dict()
    print(_write(args.out, dumps_json(sc.to_dict(), sort_keys=True)))
    return EXIT_OK


def _run_one(payload: tuple[dict, str | None, str, int]) -> dict[str, Any]:
    cfg_dict, scenario_path, algo, seed = payload
    cfg = RunConfig.from_dict(cfg_dict).validate()
    if scenario_path:
        sc = Scenario.from_dict(_load_json(scenario_path))
    else:
        sc = _scenario_for(cfg, seed)
    res = simulate(sc, algo, seed, **cfg.sim_kwargs())
    return {
        "algo": res.algo,
        "seed": seed,
        "csv": res.ledger.to_csv(header=False),
        "summary": {k: v for k, v in res.ledger.summary().items() if k != "timing"},
        "timings": res.ledger.timings,
        "stats": res.stats,
        "conservation": res.conservation,
        "scenario_hash": res.scenario_hash,
        "dump": dumps_json(res.dump()),
        "events": "".join(dumps_json(e) + "\n" for e in res.events),
        "scenario": None if scenario_path else dumps_json(sc.to_dict(), sort_keys=True),
    }


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    jobs = [(cfg.to_dict(), cfg.scenario, algo, seed) for seed in cfg.seeds for algo in cfg.algos]
    if cfg.scenario:
        Scenario.from_dict(_load_json(cfg.scenario))  # fail early on a bad file
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    csv_text = ",".join(CSV_COLUMNS) + "\n" + "".join(r["csv"] for r in results)
    _write(out / "metrics.csv", csv_text)
    timings: dict[str, list[int]] = {}
    for r in results:
        tag = f"{r['algo']}-{r['seed']}"
        _write(out / f"mappings-{tag}.json", r["dump"])
        _write(out / f"events-{tag}.jsonl", r["events"])
        if r["scenario"] is not None and r["algo"] == cfg.algos[0]:
            _write(out / f"scenario-{r['seed']}.json", r["scenario"])
        for algo, series in r["timings"].items():
            timings.setdefault(f"{algo}/{r['seed']}", series)
            timings.setdefault(algo, []).extend(series)
    aggregate: dict[str, Any] = {}
    for algo in dict.fromkeys(r["algo"] for r in results):
        rs = [r for r in results if r["algo"] == algo]
        keys = ("intent_acceptance", "intent_acceptance_high", "intent_acceptance_mid", "intent_acceptance_low",
                "request_acceptance_mid", "revenue_to_cost")
        aggregate[algo] = {
            k: (sum(r["summary"][k] for r in rs) / len(rs)) if all(r["summary"][k] is not None for r in rs) else None
            for k in keys
        }
    summary = {
        "config": cfg.to_dict(),
        "runs": [
            {"algo": r["algo"], "seed": r["seed"], "scenario_hash": r["scenario_hash"], "metrics": r["summary"],
             "stats": r["stats"], "conservation_breaches": r["conservation"]}
            for r in results
        ],
        "aggregate": aggregate,
    }
    # wall-clock numbers live apart so summary.json is reproducible byte for byte
    _write(out / "timing.json", dumps_json(timing_summary(timings), indent=1, sort_keys=True))
    print(_write(out / "summary.json", dumps_json(summary, indent=1, sort_keys=True)))
    if any(r["conservation"] for r in results):
        raise CliError(EXIT_VIOLATIONS, "conservation", "resource conservation breached")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    dump = _load_json(args.dump)
    scenario = _load_json(args.scenario)
    if not isinstance(dump, dict) or "ops" not in dump or not isinstance(scenario, dict) or "topology" not in scenario:
        raise CliError(EXIT_IO, "io", "dump or scenario has an unexpected layout")
    try:
        Scenario.from_dict(scenario)
    except ValueError as exc:
        raise CliError(EXIT_HASH, "hash_mismatch", str(exc)) from exc
    try:
        rep = validate_dump(dump, scenario)
    except HashMismatch as exc:
        raise CliError(EXIT_HASH, "hash_mismatch", str(exc)) from exc
    print(f"{len(rep.violations)} violations")
    for v in rep.violations:
        print(json.dumps(v.as_dict()))
    for c in rep.conservation:
        print(json.dumps({"kind": "conservation", "detail": c}))
    return EXIT_OK if rep.ok else EXIT_VIOLATIONS


def cmd_report(args: argparse.Namespace) -> int:
    data = _load_json(args.summary)
    if not isinstance(data, dict) or "aggregate" not in data:
        raise CliError(EXIT_IO, "io", f"{args.summary} is not a run summary")
    timing_path = Path(args.summary).with_name("timing.json")
    timing = _load_json(timing_path) if timing_path.exists() else {}
    cols = ("intent_acceptance", "intent_acceptance_high", "intent_acceptance_mid", "intent_acceptance_low",
            "request_acceptance_mid", "revenue_to_cost")
    print("algo       " + " ".join(f"{c.replace('intent_acceptance', 'acc'):>22}" for c in cols) + "   median_ms")
    for algo, agg in data["aggregate"].items():
        t = timing.get(algo, {})
        med = t.get("median_ns")
        cells = " ".join(f"{'-' if agg[c] is None else format(float(agg[c]), '.4f'):>22}" for c in cols)
        print(f"{algo:<10} {cells}   {'-' if med is None else format(float(med) / 1e6, '.3f')}")
    return EXIT_OK


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vecintent", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-topology", help="k-means + Delaunay edge topology")
    g.add_argument("--stations", help="station CSV (lat,lon); synthesised when omitted")
    g.add_argument("--n-stations", type=int, default=400, help="synthetic station count (default 400)")
    g.add_argument("--k", type=int, default=50, help="edge servers (default 50)")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out", default="topology.json")
    g.set_defaults(func=cmd_gen_topology)

    s = sub.add_parser("gen-scenario", help="topology plus event timeline")
    s.add_argument("--synth", type=int, help="number of synthetic vehicles (excludes --trace)")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", default="scenario.json")
    _add_config_flags(s)
    s.set_defaults(func=cmd_gen_scenario)

    r = sub.add_parser("run", help="simulate one or more embedders over seeds")
    _add_config_flags(r)
    r.add_argument("--out", default="runs", help="output directory")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="re-check a mapping dump against its scenario")
    v.add_argument("--dump", required=True)
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)

    rp = sub.add_parser("report", help="tabulate a run summary")
    rp.add_argument("--summary", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc)}
        code = exc.code
    except ConfigError as exc:
        err, code = {"error": "config", "message": str(exc)}, EXIT_CONFIG
    except TopologyError as exc:
        err, code = {"error": "topology", "message": str(exc)}, EXIT_TOPOLOGY
    except OSError as exc:
        err, code = {"error": "io", "message": str(exc)}, EXIT_IO
    print(json.dumps(err), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

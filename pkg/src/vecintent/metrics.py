"""Acceptance, revenue-to-cost and timing accounting.

Each intent contributes its final outcome (at withdrawal, or at the end of
the horizon) to the interval it was submitted in, so the cumulative ratios are
plain sums of per-interval numerators over per-interval denominators.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

__all__ = [
    "CSV_COLUMNS",
    "IntervalRow",
    "MetricsLedger",
    "intent_acceptance",
    "request_acceptance",
    "revenue_to_cost",
    "lower_median",
    "nearest_rank",
    "timing_summary",
    "merge",
]

CSV_COLUMNS = (
    "t",
    "algo",
    "seed",
    "submitted_hi",
    "acc_hi",
    "submitted_mid",
    "acc_mid_req",
    "submitted_lo",
    "acc_lo",
    "revenue",
    "cost",
    "embed_ns",
    "acc_mid",
    "submitted_mid_req",
)
TIMING_COLUMNS = ("embed_ns",)
_CLASS = {"high": "hi", "mid": "mid", "low": "lo"}


@dataclass
class IntervalRow:
    t: int
    algo: str = ""
    seed: int = 0
    submitted_hi: int = 0
    acc_hi: int = 0
    submitted_mid: int = 0
    acc_mid_req: int = 0
    submitted_lo: int = 0
    acc_lo: int = 0
    revenue: Decimal = Decimal(0)
    cost: Decimal = Decimal(0)
    embed_ns: int = 0
    acc_mid: int = 0
    submitted_mid_req: int = 0

    def check(self) -> None:
        for a, s in (("acc_hi", "submitted_hi"), ("acc_mid", "submitted_mid"), ("acc_lo", "submitted_lo"),
                     ("acc_mid_req", "submitted_mid_req")):
            if not 0 <= getattr(self, a) <= getattr(self, s):
                raise ValueError(f"interval {self.t}: {a} outside [0, {s}]")
        if not 0 <= self.revenue <= self.cost:
            raise ValueError(f"interval {self.t}: revenue exceeds cost")


@dataclass
class MetricsLedger:
    algo: str = ""
    seed: int = 0
    rows: list[IntervalRow] = field(default_factory=list)
    timings: dict[str, list[int]] = field(default_factory=dict)

    def row(self, t: int) -> IntervalRow:
        while len(self.rows) <= t:
            self.rows.append(IntervalRow(len(self.rows), self.algo, self.seed))
        return self.rows[t]

    def record_timing(self, algo: str, interval: int, duration_ns: int) -> None:
        if duration_ns < 0:
            raise ValueError("durations are nonnegative")
        self.timings.setdefault(algo, [])
        series = self.timings[algo]
        while len(series) <= interval:
            series.append(0)
        series[interval] += int(duration_ns)
        if algo == self.algo:
            self.row(interval).embed_ns = series[interval]

    def record_intent(
        self, t: int, priority: str, accepted: int, request_flags: Sequence[int], request_costs: Sequence[Decimal]
    ) -> None:
        row = self.row(t)
        c = _CLASS[priority]
        setattr(row, f"submitted_{c}", getattr(row, f"submitted_{c}") + 1)
        setattr(row, f"acc_{c}", getattr(row, f"acc_{c}") + int(accepted))
        if c == "mid":
            row.submitted_mid_req += len(request_flags)
            row.acc_mid_req += sum(request_flags)
        row.cost += sum(request_costs, Decimal(0))
        row.revenue += sum((k for f, k in zip(request_flags, request_costs) if f), Decimal(0))

    @classmethod
    def from_records(cls, records: Iterable[Any], horizon: int, algo: str = "", seed: int = 0) -> "MetricsLedger":
        led = cls(algo, seed)
        if horizon:
            led.row(horizon - 1)
        for r in records:
            led.record_intent(r.submit_time, r.priority, r.accepted, r.request_flags, r.request_costs)
        return led

    # ------------------------------------------------------------- output
    def totals(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(IntervalRow):
            if f.name in ("t", "algo", "seed"):
                continue
            out[f.name] = sum((getattr(r, f.name) for r in self.rows), Decimal(0) if f.type == "Decimal" else 0)
        return out

    def csv_rows(self, timing: bool = True) -> list[list[str]]:
        cols = [c for c in CSV_COLUMNS if timing or c not in TIMING_COLUMNS]
        return [[_fmt(getattr(r, c)) for c in cols] for r in self.rows]

    def to_csv(self, timing: bool = True, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow([c for c in CSV_COLUMNS if timing or c not in TIMING_COLUMNS])
        w.writerows(self.csv_rows(timing))
        return buf.getvalue()

    def summary(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "algo": self.algo,
            "seed": self.seed,
            "intervals": len(self.rows),
            "intent_acceptance": _num(intent_acceptance(self)),
            "request_acceptance_mid": _num(request_acceptance(self)),
            "revenue_to_cost": _num(revenue_to_cost(self)),
        }
        for p in ("high", "mid", "low"):
            out[f"intent_acceptance_{p}"] = _num(intent_acceptance(self, p))
        out["totals"] = {k: _num(v) for k, v in self.totals().items() if k not in TIMING_COLUMNS}
        out["timing"] = timing_summary(self.timings)
        return out


def _fmt(v: Any) -> str:
    if isinstance(v, Decimal):
        return format(v.normalize(), "f") if v else "0"
    return str(v)


def _num(v: Any) -> Any:
    if v is None:
        return None
    if isinstance(v, (Fraction, Decimal)):
        return float(v)
    return v


def _ratio(num: int | Decimal, den: int | Decimal) -> Fraction | None:
    if not den:
        return None
    return Fraction(num) / Fraction(den)


def intent_acceptance(ledger: MetricsLedger, priority: str | None = None) -> Fraction | None:
    """Accepted over submitted intents across the horizon (``None`` if nothing was submitted)."""
    classes = [_CLASS[priority]] if priority else list(_CLASS.values())
    acc = sum(getattr(r, f"acc_{c}") for r in ledger.rows for c in classes)
    sub = sum(getattr(r, f"submitted_{c}") for r in ledger.rows for c in classes)
    return _ratio(acc, sub)


def request_acceptance(ledger: MetricsLedger) -> Fraction | None:
    """Installed over submitted mid-priority requests."""
    return _ratio(sum(r.acc_mid_req for r in ledger.rows), sum(r.submitted_mid_req for r in ledger.rows))


def revenue_to_cost(ledger: MetricsLedger) -> Fraction | None:
    return _ratio(sum((r.revenue for r in ledger.rows), Decimal(0)), sum((r.cost for r in ledger.rows), Decimal(0)))


def lower_median(values: Sequence[float]) -> float | None:
    if not values:
        return None
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def nearest_rank(values: Sequence[float], q: float) -> float | None:
    if not values:
        return None
    s = sorted(values)
    idx = max(0, min(len(s) - 1, math.ceil(round(q * len(s), 9)) - 1))
    return s[idx]


def timing_summary(timings: Mapping[str, Sequence[int]]) -> dict[str, dict[str, Any]]:
    return {
        algo: {
            "median_ns": lower_median(series),
            "p95_ns": nearest_rank(series, 0.95),
            "total_ns": int(sum(series)),
        }
        for algo, series in sorted(timings.items())
    }


def merge(ledgers: Sequence[MetricsLedger]) -> MetricsLedger:
    """Interval-wise sum of ledgers (same horizon alignment, timings concatenated)."""
    if not ledgers:
        raise ValueError("nothing to merge")
    out = MetricsLedger(ledgers[0].algo, ledgers[0].seed)
    for led in ledgers:
        for r in led.rows:
            row = out.row(r.t)
            for f in fields(IntervalRow):
                if f.name in ("t", "algo", "seed"):
                    continue
                setattr(row, f.name, getattr(row, f.name) + getattr(r, f.name))
        for algo, series in led.timings.items():
            out.timings.setdefault(algo, []).extend(series)
    return out


def write_csv(ledgers: Iterable[MetricsLedger], path: str | Path, timing: bool = True) -> None:
    parts = []
    for i, led in enumerate(ledgers):
        parts.append(led.to_csv(timing=timing, header=(i == 0)))
    Path(path).write_text("".join(parts) or ",".join(CSV_COLUMNS) + "\n")


def row_dict(row: IntervalRow) -> dict[str, Any]:
    return asdict(row)

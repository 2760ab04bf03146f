"""Result collection: aggregate statistics and byte-stable CSV/JSON output.

The export schema is four columns -- ``kind,entity,metric,value`` -- where
``kind`` is one of ``latency``, ``utilization``, ``performance``,
``energy``, or ``check``.  Reruns with the same configuration produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path


def fmt_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Check:
    """One pass/fail property of a scenario."""

    name: str
    ok: bool
    detail: str = ""


@dataclass
class Report:
    scenario: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def add(self, kind: str, entity: str, metric: str, value) -> None:
        self.rows.append((kind, entity, metric, value))

    def check(self, name: str, ok: bool, detail: str = "") -> Check:
        c = Check(name, bool(ok), detail)
        self.checks.append(c)
        self.add("check", self.scenario, name, 1 if ok else 0)
        return c

    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    # ---------------------------------------------------------------- output

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "entity", "metric", "value"])
        for kind, entity, metric, value in self.rows:
            writer.writerow([kind, entity, metric, fmt_value(value)])
        return buf.getvalue()

    def to_json(self) -> str:
        tree: dict = {}
        for kind, entity, metric, value in self.rows:
            tree.setdefault(kind, {}).setdefault(entity, {})[metric] = value
        doc = {
            "scenario": self.scenario,
            "results": tree,
            "passed": self.passed(),
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def write(self, outdir, formats=("csv", "json")) -> list:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            p = out / f"{self.scenario}.csv"
            p.write_bytes(self.to_csv().encode())
            written.append(p)
        if "json" in formats:
            p = out / f"{self.scenario}.json"
            p.write_bytes(self.to_json().encode())
            written.append(p)
        return written


def latencies(metrics, tag: str, direction: str = "oneway") -> list:
    """Extract packet latencies for one traffic class.

    ``direction`` is ``oneway`` (request injection to delivery) or ``rtt``
    (injection to response delivery)."""
    out = []
    for t, d, _src, _dst, _ch, inject, deliver in metrics.packets:
        if t == tag and d == direction:
            out.append(deliver - inject)
    return out


def latency_rows(report: Report, metrics, tag: str, entity: str,
                 direction: str = "oneway") -> None:
    vals = latencies(metrics, tag, direction)
    if not vals:
        return
    report.add("latency", entity, "count", len(vals))
    report.add("latency", entity, "min_cycles", min(vals))
    report.add("latency", entity, "max_cycles", max(vals))
    report.add("latency", entity, "mean_cycles", sum(vals) / len(vals))


def channel_flits(metrics, channel: str) -> int:
    """Total link traversals on one physical channel."""
    return sum(v for (name, ch), v in metrics.link_flits.items()
               if ch == channel)

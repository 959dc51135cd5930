"""Benchmark bookkeeping: samples, medians/quartiles, overhead, CSV + tables."""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field
from typing import Optional


def overhead_pct(median_with: float, median_without: float) -> float:
    """(with - without) / without * 100"""
    return (median_with - median_without) / median_without * 100.0


@dataclass
class SampleSet:
    label: str
    wall_s: list[float] = field(default_factory=list)
    events: list[int] = field(default_factory=list)
    blocked_s: list[float] = field(default_factory=list)

    def add(self, wall_s: float, events: int = 0, blocked_s: float = 0.0) -> None:
        self.wall_s.append(wall_s)
        self.events.append(events)
        self.blocked_s.append(blocked_s)

    @property
    def median(self) -> float:
        return statistics.median(self.wall_s)

    @property
    def quartiles(self) -> tuple[float, float, float]:
        if len(self.wall_s) < 2:
            m = self.median
            return (m, m, m)
        q = statistics.quantiles(self.wall_s, n=4, method="inclusive")
        return (q[0], q[1], q[2])

    def row(self, baseline_median: Optional[float] = None) -> dict:
        q1, q2, q3 = self.quartiles
        row = {
            "label": self.label,
            "runs": len(self.wall_s),
            "median_s": round(q2, 4),
            "q1_s": round(q1, 4),
            "q3_s": round(q3, 4),
            "events_per_run": self.events[0] if self.events else 0,
            "blocked_s_median": round(statistics.median(self.blocked_s), 6) if self.blocked_s else 0.0,
        }
        if baseline_median is not None and self.label != "baseline":
            row["overhead_pct"] = round(overhead_pct(q2, baseline_median), 3)
        return row


@dataclass
class BenchReport:
    title: str
    sample_sets: list[SampleSet] = field(default_factory=list)
    baseline_label: str = "baseline"

    def sample_set(self, label: str) -> SampleSet:
        for s in self.sample_sets:
            if s.label == label:
                return s
        s = SampleSet(label)
        self.sample_sets.append(s)
        return s

    @property
    def baseline_median(self) -> Optional[float]:
        for s in self.sample_sets:
            if s.label == self.baseline_label and s.wall_s:
                return s.median
        return None

    def rows(self) -> list[dict]:
        base = self.baseline_median
        return [s.row(base) for s in self.sample_sets]

    def to_csv(self) -> str:
        rows = self.rows()
        if not rows:
            return ""
        fieldnames = list(rows[0].keys())
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    def to_table(self) -> str:
        rows = self.rows()
        if not rows:
            return f"{self.title}: no samples"
        cols = list(rows[0].keys())
        for row in rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        widths = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in cols}
        lines = [self.title, "  ".join(c.ljust(widths[c]) for c in cols)]
        for row in rows:
            lines.append("  ".join(str(row.get(c, "")).ljust(widths[c]) for c in cols))
        return "\n".join(lines)


def percentile(samples: list[float], p: float) -> float:
    """Nearest-rank percentile (0 < p <= 100)."""
    if not samples:
        raise ValueError("no samples")
    ordered = sorted(samples)
    rank = max(1, int(-(-p * len(ordered) // 100)))  # ceil without math import
    return ordered[rank - 1]

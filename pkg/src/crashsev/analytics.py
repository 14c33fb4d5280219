"""Exploratory aggregations over a column store.

Counts are accumulated partition by partition and merged by addition, so the
result does not depend on scan or merge order.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UsageError
from .features import BinSpec, bin_indices
from .ingest.store import PartitionPredicate, list_partitions, read_partition

SEVERITIES = (1, 2, 3, 4)
GROUP_KEYS = ("state", "year", "hour", "weather")
HIST_COLUMNS = ("temperature_f", "pressure_in")


@dataclass
class GroupCountTable:
    key: str
    rows: list[tuple[object, int, tuple[int, int, int, int]]]
    total: int
    other: int = 0  # rows belonging to groups cut off by top_k

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "total": self.total,
            "other": self.other,
            "rows": [
                {"value": v, "count": c, "by_severity": dict(zip(map(str, SEVERITIES), s))}
                for v, c, s in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.key, "count", *(f"severity_{s}" for s in SEVERITIES)])
        for v, c, s in self.rows:
            w.writerow([v, c, *s])
        return buf.getvalue()

    def counts(self) -> dict:
        return {v: c for v, c, _ in self.rows}


@dataclass
class SeverityHistogram:
    column: str
    spec: BinSpec
    counts: np.ndarray  # (n_bins, 4)
    out_of_range: int
    out_of_range_by_severity: tuple[int, ...] = field(default=(0, 0, 0, 0))

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.out_of_range

    def severity_counts(self, severity: int) -> np.ndarray:
        return self.counts[:, SEVERITIES.index(severity)]

    def to_dict(self) -> dict:
        edges = self.spec.edges()
        return {
            "column": self.column,
            "spec": self.spec.to_dict(),
            "out_of_range": self.out_of_range,
            "bins": [
                {
                    "lower": edges[i],
                    "upper": edges[i + 1],
                    "by_severity": dict(zip(map(str, SEVERITIES), map(int, self.counts[i]))),
                }
                for i in range(self.spec.n_bins)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lower", "upper", *(f"severity_{s}" for s in SEVERITIES)])
        edges = self.spec.edges()
        for i in range(self.spec.n_bins):
            w.writerow([edges[i], edges[i + 1], *map(int, self.counts[i])])
        w.writerow(["out_of_range", "", *self.out_of_range_by_severity])
        return buf.getvalue()


def _severity_slot(sev: np.ndarray) -> np.ndarray:
    return sev.astype(np.int64) - 1


def _partition_counts(root, part, key: str) -> Counter:
    cols = [key, "severity"] if key not in ("state", "year") else ["severity"]
    data = read_partition(root, part, cols)
    sev = _severity_slot(data["severity"][0])
    per_sev = np.bincount(sev, minlength=4)
    out: Counter = Counter()
    if key == "state" or key == "year":
        # the partition key already fixes the group value
        value = part.state if key == "state" else part.year
        for s, n in enumerate(per_sev):
            if n:
                out[(value, s)] += int(n)
        return out
    values, nulls = data[key]
    if isinstance(values, np.ndarray):
        values = values.tolist()
    for v, null, s in zip(values, nulls, sev.tolist()):
        out[(None if null else v, s)] += 1
    return out


def count_by(
    root: str | Path,
    key: str,
    top_k: int | None = None,
    where: PartitionPredicate | None = None,
    workers: int = 1,
) -> GroupCountTable:
    """Row counts per group value with a per-severity breakdown.

    Rows are ordered by descending count, ties by ascending value. With
    ``top_k`` the table is truncated after sorting and the remainder is
    reported in ``other``.
    """
    if key not in GROUP_KEYS:
        raise UsageError(f"invalid group key {key!r}; choose from {GROUP_KEYS}")
    if top_k is not None and top_k < 1:
        raise UsageError("top_k must be >= 1")
    parts = list_partitions(root, where)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda p: _partition_counts(root, p, key), parts))
    else:
        partials = [_partition_counts(root, p, key) for p in parts]
    merged: Counter = Counter()
    for c in partials:
        merged.update(c)
    groups: dict = {}
    for (value, s), n in merged.items():
        groups.setdefault(value, [0, 0, 0, 0])[s] += n
    rows = [(v, sum(s), tuple(s)) for v, s in groups.items()]
    rows.sort(key=lambda r: (-r[1], str(r[0]) if key in ("state", "weather") else r[0]))
    total = sum(r[1] for r in rows)
    if top_k is not None:
        rows = rows[:top_k]
    return GroupCountTable(key, rows, total, total - sum(r[1] for r in rows))


def severity_histogram(
    root: str | Path,
    column: str,
    spec: BinSpec,
    where: PartitionPredicate | None = None,
) -> SeverityHistogram:
    """Per-bin, per-severity counts of a numeric column; misses are tallied."""
    if column not in HIST_COLUMNS:
        raise UsageError(f"invalid histogram column {column!r}; choose from {HIST_COLUMNS}")
    if not isinstance(spec, BinSpec):
        raise UsageError("spec must be a BinSpec")
    counts = np.zeros((spec.n_bins, 4), dtype=np.int64)
    oor = np.zeros(4, dtype=np.int64)
    for part in list_partitions(root, where):
        data = read_partition(root, part, [column, "severity"])
        values, nulls = data[column]
        sev = _severity_slot(data["severity"][0])
        idx = bin_indices(np.where(nulls, np.nan, values), spec)
        inside = idx >= 0
        np.add.at(counts, (idx[inside], sev[inside]), 1)
        oor += np.bincount(sev[~inside], minlength=4)
    return SeverityHistogram(column, spec, counts, int(oor.sum()), tuple(int(v) for v in oor))


def severe_hourly_counts(root: str | Path, where: PartitionPredicate | None = None) -> np.ndarray:
    """Accidents of severity 3 or 4 per hour of day, shape (24,)."""
    table = count_by(root, "hour", where=where)
    out = np.zeros(24, dtype=np.int64)
    for hour, _, by_sev in table.rows:
        out[int(hour)] = by_sev[2] + by_sev[3]
    return out


def window_sums(counts: np.ndarray, bins_per_window: int) -> np.ndarray:
    """Sums over every run of ``bins_per_window`` consecutive bins."""
    counts = np.asarray(counts, dtype=np.int64)
    c = np.r_[0, np.cumsum(counts)]
    return c[bins_per_window:] - c[:-bins_per_window]


def write_table(table: GroupCountTable | SeverityHistogram, path: str | Path) -> None:
    """Write as CSV when the path ends in ``.csv``, JSON otherwise."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(table.to_csv(), encoding="utf-8")
    else:
        path.write_text(json.dumps(table.to_dict(), indent=1) + "\n", encoding="utf-8")

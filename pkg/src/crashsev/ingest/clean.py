"""Two-pass cleaning: parse and drop, then impute from kept-row medians."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import islice
from typing import Any, Iterable

import numpy as np

from ..errors import EmptyDatasetError
from .records import (
    DEFAULT_SCHEMA,
    POI_FLAGS,
    CrashRecord,
    DropDecision,
    RawRecord,
    Schema,
    parse_record,
)

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_ROWS = 65536
UNKNOWN_CATEGORY = "Unknown"
IMPUTED_COLUMNS = ("temperature_f", "pressure_in", "weather", *POI_FLAGS)


@dataclass
class CleaningReport:
    rows_read: int = 0
    rows_dropped: int = 0
    rows_kept: int = 0
    imputed: dict[str, int] = field(default_factory=lambda: dict.fromkeys(IMPUTED_COLUMNS, 0))
    fill_values: dict[str, Any] = field(default_factory=dict)
    drop_reasons: dict[str, int] = field(default_factory=dict)
    unknown_columns: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CleaningReport":
        return cls(**data)


def _chunks(items: Iterable, size: int):
    it = iter(items)
    while chunk := list(islice(it, size)):
        yield chunk


def _median(values: list[float]) -> float | None:
    if not values:
        return None
    return float(np.median(np.asarray(values, dtype=np.float64)))


def clean_dataset(
    records: Iterable[RawRecord],
    schema: Schema = DEFAULT_SCHEMA,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> tuple[list[CrashRecord], CleaningReport]:
    """Drop unusable rows and impute the rest.

    Pass 1 parses the stream chunk by chunk, dropping rows whose identifying
    fields are missing or invalid (and repeated ids), and collects the observed
    temperature and pressure values of the kept rows. Pass 2 fills numeric gaps
    with those medians, weather gaps with ``"Unknown"`` and POI gaps with False.
    """
    if chunk_rows < 1:
        raise ValueError("chunk_rows must be >= 1")
    report = CleaningReport()
    drops: Counter[str] = Counter()
    seen: set[str] = set()
    kept: list[CrashRecord] = []
    observed: dict[str, list[float]] = {"temperature_f": [], "pressure_in": []}
    unknown: set[str] = set()

    for chunk in _chunks(records, chunk_rows):
        for raw in chunk:
            report.rows_read += 1
            unknown.update(raw.unknown_columns)
            parsed = parse_record(raw, schema)
            if isinstance(parsed, CrashRecord) and parsed.id in seen:
                parsed = DropDecision("id", raw.line, "duplicate id")
            if isinstance(parsed, DropDecision):
                drops[parsed.field] += 1
                continue
            seen.add(parsed.id)
            kept.append(parsed)
            for name, values in observed.items():
                value = getattr(parsed, name)
                if value is not None:
                    values.append(value)

    if report.rows_read == 0:
        raise EmptyDatasetError()

    medians = {name: _median(values) for name, values in observed.items()}
    for name, value in medians.items():
        if value is None:
            # every kept row lacks this column; no median exists
            medians[name] = 0.0
            if kept:
                report.warnings.append(f"{name}: no observed values, imputed 0.0")
    report.fill_values = {
        "temperature_f": medians["temperature_f"],
        "pressure_in": medians["pressure_in"],
        "weather": UNKNOWN_CATEGORY,
        **{flag: False for flag in POI_FLAGS},
    }

    imputed = report.imputed
    for start in range(0, len(kept), chunk_rows):
        for i in range(start, min(start + chunk_rows, len(kept))):
            rec = kept[i]
            if rec.is_complete():
                continue
            changes: dict[str, Any] = {}
            for name in ("temperature_f", "pressure_in"):
                if getattr(rec, name) is None:
                    changes[name] = medians[name]
                    imputed[name] += 1
            if rec.weather is None:
                changes["weather"] = UNKNOWN_CATEGORY
                imputed["weather"] += 1
            if any(flag is None for flag in rec.poi_flags):
                flags = []
                for name, flag in zip(POI_FLAGS, rec.poi_flags):
                    if flag is None:
                        imputed[name] += 1
                        flag = False
                    flags.append(flag)
                changes["poi_flags"] = tuple(flags)
            kept[i] = rec.replace(**changes)

    report.rows_kept = len(kept)
    report.rows_dropped = report.rows_read - report.rows_kept
    report.drop_reasons = dict(sorted(drops.items()))
    report.unknown_columns = sorted(unknown)
    if report.rows_dropped * 2 > report.rows_read:
        msg = f"{report.rows_dropped} of {report.rows_read} rows dropped (more than half)"
        report.warnings.append(msg)
        logger.warning(msg)
    return kept, report

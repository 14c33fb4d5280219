"""Row types and per-row parsing for US-Accidents-style CSV exports."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Iterator, Mapping

from ..errors import CsvFormatError, DataError

NULL_SENTINELS = frozenset({"", "na", "n/a", "null", "none"})

POI_FLAGS = ("amenity", "bump", "crossing", "junction", "stop", "traffic_signal")

US_STATES = frozenset(
    """AL AK AZ AR CA CO CT DE DC FL GA HI ID IL IN IA KS KY LA ME MD MA MI MN MS
    MO MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV WI WY""".split()
)

_TIMESTAMP = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[ T](\d{2}):(\d{2}):(\d{2})(\.\d+)?$")
_TRUE = frozenset({"true", "t", "1", "yes", "y"})
_FALSE = frozenset({"false", "f", "0", "no", "n"})


@dataclass(frozen=True)
class Schema:
    """Maps CrashRecord fields to CSV header names (matched case-insensitively)."""

    id: str = "ID"
    severity: str = "Severity"
    start_time: str = "Start_Time"
    state: str = "State"
    start_lat: str = "Start_Lat"
    start_lng: str = "Start_Lng"
    temperature_f: str = "Temperature(F)"
    pressure_in: str = "Pressure(in)"
    weather: str = "Weather_Condition"
    poi: tuple[str, ...] = (
        "Amenity",
        "Bump",
        "Crossing",
        "Junction",
        "Stop",
        "Traffic_Signal",
    )

    def columns(self) -> dict[str, str]:
        """Field name -> case-folded header name, POI flags included."""
        cols = {
            name: getattr(self, name).strip().casefold()
            for name in (
                "id",
                "severity",
                "start_time",
                "state",
                "start_lat",
                "start_lng",
                "temperature_f",
                "pressure_in",
                "weather",
            )
        }
        for flag, header in zip(POI_FLAGS, self.poi):
            cols[flag] = header.strip().casefold()
        return cols

    def header(self) -> list[str]:
        return [
            self.id,
            self.severity,
            self.start_time,
            self.state,
            self.start_lat,
            self.start_lng,
            self.temperature_f,
            self.pressure_in,
            self.weather,
            *self.poi,
        ]


DEFAULT_SCHEMA = Schema()


@dataclass(frozen=True)
class RawRecord:
    """One CSV row as read: case-folded header -> cell text."""

    cells: Mapping[str, str | None]
    line: int
    unknown_columns: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class CrashRecord:
    """A parsed accident row.

    ``temperature_f``, ``pressure_in`` and ``weather`` may be ``None`` straight
    out of :func:`parse_record`, as may entries of ``poi_flags``;
    :func:`~crashsev.ingest.clean.clean_dataset` fills them in.
    """

    id: str
    severity: int
    start_time: datetime
    state: str
    start_lat: float
    start_lng: float
    temperature_f: float | None
    pressure_in: float | None
    weather: str | None
    poi_flags: tuple[bool | None, ...] = field(default=(False,) * len(POI_FLAGS))

    @property
    def year(self) -> int:
        return self.start_time.year

    @property
    def hour(self) -> int:
        return self.start_time.hour

    def is_complete(self) -> bool:
        return (
            self.temperature_f is not None
            and self.pressure_in is not None
            and self.weather is not None
            and all(flag is not None for flag in self.poi_flags)
        )

    def replace(self, **changes) -> "CrashRecord":
        return replace(self, **changes)


@dataclass(frozen=True)
class DropDecision:
    field: str
    line: int
    reason: str = ""


def is_missing(cell: str | None) -> bool:
    return cell is None or cell.strip().casefold() in NULL_SENTINELS


def parse_timestamp(text: str) -> datetime:
    """Parse ``YYYY-MM-DD HH:MM:SS[.fff]``; fractional seconds are truncated."""
    m = _TIMESTAMP.match(text.strip())
    if m is None:
        raise ValueError(f"malformed timestamp {text!r}")
    y, mo, d, h, mi, s = (int(g) for g in m.groups()[:6])
    return datetime(y, mo, d, h, mi, s)


def normalize_weather(text: str) -> str | None:
    """Trim, collapse inner whitespace and title-case; ``None`` if nothing is left."""
    cleaned = " ".join(text.split())
    if not cleaned:
        return None
    return cleaned.title()


def _parse_float(cell: str | None) -> float | None:
    if is_missing(cell):
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_flag(cell: str | None) -> bool | None:
    if is_missing(cell):
        return None
    text = cell.strip().casefold()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    return None


def parse_record(raw: RawRecord, schema: Schema = DEFAULT_SCHEMA) -> CrashRecord | DropDecision:
    """Type one raw row, or say which identifying field makes it unusable.

    Imputable fields (temperature, pressure, weather, POI flags) come back as
    ``None`` when missing or unparseable instead of causing a drop.
    """
    cols = schema.columns()
    cells = raw.cells

    def cell(name: str) -> str | None:
        return cells.get(cols[name])

    rid = cell("id")
    if is_missing(rid):
        return DropDecision("id", raw.line, "missing")

    sev_text = cell("severity")
    if is_missing(sev_text):
        return DropDecision("severity", raw.line, "missing")
    try:
        severity = int(float(sev_text))
        if float(sev_text) != severity:
            raise ValueError
    except (ValueError, OverflowError):
        return DropDecision("severity", raw.line, f"not an integer: {sev_text!r}")
    if severity not in (1, 2, 3, 4):
        return DropDecision("severity", raw.line, f"out of range: {severity}")

    ts_text = cell("start_time")
    if is_missing(ts_text):
        return DropDecision("start_time", raw.line, "missing")
    try:
        start_time = parse_timestamp(ts_text)
    except ValueError as exc:
        return DropDecision("start_time", raw.line, str(exc))

    state_text = cell("state")
    if is_missing(state_text):
        return DropDecision("state", raw.line, "missing")
    state = state_text.strip().upper()
    if state not in US_STATES:
        return DropDecision("state", raw.line, f"unknown state code {state_text!r}")

    lat = _parse_float(cell("start_lat"))
    if lat is None or not -90.0 <= lat <= 90.0:
        return DropDecision("start_lat", raw.line, "missing or out of range")
    lng = _parse_float(cell("start_lng"))
    if lng is None or not -180.0 <= lng <= 180.0:
        return DropDecision("start_lng", raw.line, "missing or out of range")

    weather_text = cell("weather")
    weather = None if is_missing(weather_text) else normalize_weather(weather_text)

    return CrashRecord(
        id=rid.strip(),
        severity=severity,
        start_time=start_time,
        state=state,
        start_lat=lat,
        start_lng=lng,
        temperature_f=_parse_float(cell("temperature_f")),
        pressure_in=_parse_float(cell("pressure_in")),
        weather=weather,
        poi_flags=tuple(_parse_flag(cell(flag)) for flag in POI_FLAGS),
    )


def iter_csv(path: str | Path, schema: Schema = DEFAULT_SCHEMA) -> Iterator[RawRecord]:
    """Stream RawRecords from a CSV file with a header row.

    Raises CsvFormatError on a row whose column count differs from the header,
    and DataError if a required column is missing from the header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return
        names = [h.strip().casefold() for h in header]
        required = schema.columns()
        absent = [
            getattr(schema, f) if f not in POI_FLAGS else schema.poi[POI_FLAGS.index(f)]
            for f, h in required.items()
            if h not in names
        ]
        if absent:
            raise DataError(f"missing required columns: {', '.join(absent)}")
        known = set(required.values())
        unknown = tuple(n for n in names if n not in known)
        width = len(names)
        for row in reader:
            if not row:
                continue
            if len(row) != width:
                raise CsvFormatError(
                    reader.line_num, f"expected {width} columns, found {len(row)}"
                )
            yield RawRecord(dict(zip(names, row)), reader.line_num, unknown)


def to_raw(record: CrashRecord, line: int, schema: Schema = DEFAULT_SCHEMA) -> RawRecord:
    """Render a record back into raw cells (inverse of parse_record for clean rows)."""
    cols = schema.columns()

    def text(value) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "True" if value else "False"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    cells = {
        cols["id"]: record.id,
        cols["severity"]: str(record.severity),
        cols["start_time"]: record.start_time.strftime("%Y-%m-%d %H:%M:%S"),
        cols["state"]: record.state,
        cols["start_lat"]: text(record.start_lat),
        cols["start_lng"]: text(record.start_lng),
        cols["temperature_f"]: text(record.temperature_f),
        cols["pressure_in"]: text(record.pressure_in),
        cols["weather"]: text(record.weather),
    }
    for flag, value in zip(POI_FLAGS, record.poi_flags):
        cells[cols[flag]] = text(value)
    return RawRecord(cells, line)

"""Partitioned columnar store, one directory per (state, year).

Layout::

    root/manifest.json                       global manifest, written last
    root/state=CA/year=2016/manifest.json    per-partition row count and column stats
    root/state=CA/year=2016/<column>.col     one file per column

Column file: ``b"CSC1"``, a 4-byte type tag, the row count as little-endian
uint64, a null mask (bit i set means row i is null, LSB first, padded to whole
bytes), then the payload. Numerics are fixed-width little-endian; text cells
are a little-endian uint32 byte length followed by UTF-8 bytes.
"""

from __future__ import annotations

import calendar
import hashlib
import json
import os
import shutil
import struct
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..errors import EmptyDatasetError, IntegrityError, StoreIOError
from .records import POI_FLAGS, CrashRecord

MAGIC = b"CSC1"
FORMAT = "crashsev-columnstore"
VERSION = 1
MANIFEST = "manifest.json"

_EPOCH = datetime(1970, 1, 1)
_NUMERIC = {"i1": "<i1", "i2": "<i2", "i8": "<i8", "f8": "<f8", "bool": "<u1"}

# (column, type tag, nullable)
COLUMNS: tuple[tuple[str, str, bool], ...] = (
    ("id", "text", False),
    ("severity", "i1", False),
    ("start_time", "i8", False),
    ("year", "i2", False),
    ("hour", "i1", False),
    ("state", "text", False),
    ("start_lat", "f8", False),
    ("start_lng", "f8", False),
    ("temperature_f", "f8", True),
    ("pressure_in", "f8", True),
    ("weather", "text", True),
    *((flag, "bool", True) for flag in POI_FLAGS),
)
COLUMN_TYPES = {name: tag for name, tag, _ in COLUMNS}


@dataclass(frozen=True)
class PartitionInfo:
    state: str
    year: int
    path: str
    row_count: int

    @property
    def name(self) -> str:
        return self.path


PartitionPredicate = Callable[[PartitionInfo], bool]


def partition_filter(
    states: Iterable[str] | str | None = None, years: Iterable[int] | int | None = None
) -> PartitionPredicate:
    """Build a predicate selecting partitions by state and/or year."""
    if isinstance(states, str):
        states = [states]
    if isinstance(years, int):
        years = [years]
    state_set = None if states is None else {s.upper() for s in states}
    year_set = None if years is None else set(years)

    def predicate(p: PartitionInfo) -> bool:
        return (state_set is None or p.state in state_set) and (
            year_set is None or p.year in year_set
        )

    return predicate


def to_epoch_seconds(ts: datetime) -> int:
    return calendar.timegm(ts.timetuple())


def from_epoch_seconds(seconds: int) -> datetime:
    return _EPOCH + timedelta(seconds=int(seconds))


# ---------------------------------------------------------------- encoding


def _pack_mask(nulls: Sequence[bool]) -> bytes:
    return np.packbits(np.asarray(nulls, dtype=bool), bitorder="little").tobytes()


def encode_column(tag: str, values: Sequence) -> bytes:
    """Serialize one column; ``None`` entries are recorded in the null mask."""
    n = len(values)
    nulls = [v is None for v in values]
    parts = [MAGIC, tag.encode("ascii").ljust(4, b"\0"), struct.pack("<Q", n), _pack_mask(nulls)]
    if tag == "text":
        for v in values:
            data = b"" if v is None else v.encode("utf-8")
            parts.append(struct.pack("<I", len(data)))
            parts.append(data)
    else:
        dtype = _NUMERIC[tag]
        filled = [0 if v is None else v for v in values]
        parts.append(np.asarray(filled, dtype=dtype).tobytes())
    return b"".join(parts)


def decode_column(blob: bytes, tag: str, expected_rows: int, where: tuple[str, str]):
    """Inverse of :func:`encode_column`; returns (values, null mask).

    Text columns decode to a list of str, numeric ones to a numpy array. Any
    disagreement with ``expected_rows`` or a short payload raises IntegrityError.
    """
    partition, column = where
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise IntegrityError(partition, column, "bad column file header")
    stored_tag = blob[4:8].rstrip(b"\0").decode("ascii", "replace")
    if stored_tag != tag:
        raise IntegrityError(partition, column, f"type {stored_tag!r} != manifest {tag!r}")
    (n,) = struct.unpack_from("<Q", blob, 8)
    if n != expected_rows:
        raise IntegrityError(partition, column, f"file holds {n} rows, manifest says {expected_rows}")
    mask_len = (n + 7) // 8
    offset = 16 + mask_len
    if len(blob) < offset:
        raise IntegrityError(partition, column, "truncated null mask")
    nulls = np.unpackbits(
        np.frombuffer(blob, dtype=np.uint8, count=mask_len, offset=16), bitorder="little"
    )[:n].astype(bool)
    if tag == "text":
        values: list[str] = []
        for _ in range(n):
            if offset + 4 > len(blob):
                raise IntegrityError(partition, column, "truncated text payload")
            (size,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            if offset + size > len(blob):
                raise IntegrityError(partition, column, "truncated text payload")
            values.append(blob[offset : offset + size].decode("utf-8"))
            offset += size
        if offset != len(blob):
            raise IntegrityError(partition, column, "trailing bytes after payload")
        return values, nulls
    dtype = np.dtype(_NUMERIC[tag])
    if len(blob) - offset != n * dtype.itemsize:
        raise IntegrityError(
            partition, column, f"payload is {len(blob) - offset} bytes, expected {n * dtype.itemsize}"
        )
    return np.frombuffer(blob, dtype=dtype, offset=offset).copy(), nulls


# ---------------------------------------------------------------- writing


def _record_columns(records: Sequence[CrashRecord]) -> dict[str, list]:
    cols: dict[str, list] = {
        "id": [r.id for r in records],
        "severity": [r.severity for r in records],
        "start_time": [to_epoch_seconds(r.start_time) for r in records],
        "year": [r.year for r in records],
        "hour": [r.hour for r in records],
        "state": [r.state for r in records],
        "start_lat": [r.start_lat for r in records],
        "start_lng": [r.start_lng for r in records],
        "temperature_f": [r.temperature_f for r in records],
        "pressure_in": [r.pressure_in for r in records],
        "weather": [r.weather for r in records],
    }
    for i, flag in enumerate(POI_FLAGS):
        cols[flag] = [r.poi_flags[i] for r in records]
    return cols


def _stats(tag: str, values: list) -> dict:
    present = [v for v in values if v is not None]
    null_count = len(values) - len(present)
    if not present:
        return {"null_count": null_count, "min": None, "max": None, "distinct": 0}
    if tag == "bool":
        present = [bool(v) for v in present]
    elif tag == "f8":
        present = [float(v) for v in present]
    return {
        "null_count": null_count,
        "min": min(present),
        "max": max(present),
        "distinct": len(set(present)),
    }


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _write_partition(root: Path, key: tuple[str, int], records: list[CrashRecord]) -> dict:
    state, year = key
    rel = f"state={state}/year={year}"
    pdir = root / rel
    try:
        pdir.mkdir(parents=True, exist_ok=False)
        columns = _record_columns(records)
        meta = {}
        for name, tag, _ in COLUMNS:
            blob = encode_column(tag, columns[name])
            fname = f"{name}.col"
            _atomic_write(pdir / fname, blob)
            meta[name] = {
                "type": tag,
                "file": fname,
                "bytes": len(blob),
                "sha256": hashlib.sha256(blob).hexdigest(),
                **_stats(tag, columns[name]),
            }
        manifest = {"state": state, "year": year, "row_count": len(records), "columns": meta}
        _atomic_write(pdir / MANIFEST, _json_bytes(manifest))
    except OSError as exc:
        raise StoreIOError(f"writing partition {rel}: {exc}") from exc
    return {"state": state, "year": year, "path": rel, "row_count": len(records)}


def _prepare_root(root: Path, overwrite: bool) -> None:
    if root.exists():
        if not overwrite:
            raise StoreIOError(f"{root} already exists (pass overwrite to replace it)")
        if not root.is_dir():
            raise StoreIOError(f"{root} exists and is not a directory")
        if any(root.iterdir()) and not (root / MANIFEST).exists():
            raise StoreIOError(f"{root} is a non-empty directory that is not a column store")
        shutil.rmtree(root)
    try:
        root.mkdir(parents=True)
    except OSError as exc:
        raise StoreIOError(f"creating {root}: {exc}") from exc


def write_store(
    records: Sequence[CrashRecord],
    root: str | Path,
    overwrite: bool = False,
    workers: int = 1,
) -> dict:
    """Write records partitioned by (state, year); returns the global manifest.

    Row order inside each partition follows input order. Partitions may be
    written by several threads; output bytes do not depend on ``workers``.
    """
    if not records:
        raise EmptyDatasetError()
    root = Path(root)
    groups: dict[tuple[str, int], list[CrashRecord]] = defaultdict(list)
    for rec in records:
        groups[(rec.state, rec.year)].append(rec)
    keys = sorted(groups)
    _prepare_root(root, overwrite)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda k: _write_partition(root, k, groups[k]), keys))
    else:
        entries = [_write_partition(root, k, groups[k]) for k in keys]
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "partition_key": ["state", "year"],
        "columns": [[name, tag] for name, tag, _ in COLUMNS],
        "total_rows": sum(e["row_count"] for e in entries),
        "partitions": entries,
    }
    try:
        _atomic_write(root / MANIFEST, _json_bytes(manifest))
    except OSError as exc:
        raise StoreIOError(f"writing global manifest: {exc}") from exc
    return manifest


# ---------------------------------------------------------------- reading


def load_manifest(root: str | Path) -> dict:
    path = Path(root) / MANIFEST
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IntegrityError(str(root), None, "missing global manifest") from exc
    except (OSError, ValueError) as exc:
        raise IntegrityError(str(root), None, f"corrupt global manifest: {exc}") from exc
    if manifest.get("format") != FORMAT or manifest.get("version") != VERSION:
        raise IntegrityError(str(root), None, "unrecognized store format")
    return manifest


def list_partitions(root: str | Path, where: PartitionPredicate | None = None) -> list[PartitionInfo]:
    parts = [
        PartitionInfo(p["state"], int(p["year"]), p["path"], int(p["row_count"]))
        for p in load_manifest(root)["partitions"]
    ]
    return [p for p in parts if where is None or where(p)]


def read_partition(
    root: str | Path, part: PartitionInfo, columns: Sequence[str] | None = None
) -> dict[str, tuple]:
    """Read selected columns of one partition as ``{name: (values, nulls)}``."""
    pdir = Path(root) / part.path
    try:
        meta = json.loads((pdir / MANIFEST).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise IntegrityError(part.path, None, f"unreadable partition manifest: {exc}") from exc
    if meta.get("row_count") != part.row_count:
        raise IntegrityError(part.path, None, "partition manifest disagrees with global manifest")
    wanted = list(COLUMN_TYPES) if columns is None else list(columns)
    out = {}
    for name in wanted:
        info = meta["columns"].get(name)
        if info is None:
            raise IntegrityError(part.path, name, "column missing from manifest")
        try:
            blob = (pdir / info["file"]).read_bytes()
        except OSError as exc:
            raise IntegrityError(part.path, name, f"unreadable column file: {exc}") from exc
        out[name] = decode_column(blob, info["type"], part.row_count, (part.path, name))
    return out


def _records_from_columns(cols: dict[str, tuple], partition: str) -> Iterator[CrashRecord]:
    def column(name):
        values, nulls = cols[name]
        if isinstance(values, np.ndarray):
            values = values.tolist()
        return [None if null else v for v, null in zip(values, nulls)]

    ids = column("id")
    sev = column("severity")
    ts = column("start_time")
    state = column("state")
    lat = column("start_lat")
    lng = column("start_lng")
    temp = column("temperature_f")
    pres = column("pressure_in")
    weather = column("weather")
    flags = list(zip(*(column(f) for f in POI_FLAGS)))
    years, hours = column("year"), column("hour")
    for i in range(len(ids)):
        start = from_epoch_seconds(ts[i])
        if start.year != years[i] or start.hour != hours[i]:
            raise IntegrityError(partition, "start_time", f"derived year/hour mismatch for id {ids[i]!r}")
        yield CrashRecord(
            id=ids[i],
            severity=int(sev[i]),
            start_time=start,
            state=state[i],
            start_lat=lat[i],
            start_lng=lng[i],
            temperature_f=temp[i],
            pressure_in=pres[i],
            weather=weather[i],
            poi_flags=tuple(None if f is None else bool(f) for f in flags[i]),
        )


def read_store(root: str | Path, where: PartitionPredicate | None = None) -> Iterator[CrashRecord]:
    """Yield the records of every partition accepted by ``where``.

    Each partition is fully read and validated before any of its rows are
    yielded, so a corrupt column never produces a partial partition.
    """
    for part in list_partitions(root, where):
        cols = read_partition(root, part)
        yield from list(_records_from_columns(cols, part.path))

"""Design-matrix construction and histogram binning.

An :class:`EncoderState` is fitted on training records only and then applied
unchanged to any record set, so test rows never influence the
standardization or the one-hot vocabularies.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyDatasetError, UsageError
from .ingest.records import POI_FLAGS, CrashRecord

NUMERIC_COLUMNS = ("temperature_f", "pressure_in", "start_lat", "start_lng")
CATEGORICAL_COLUMNS = ("state", "weather")
ALL_COLUMNS = ("temperature_f", "pressure_in", "hour", "start_lat", "start_lng", "state", "weather", "poi_flags")
UNSEEN = "<unseen>"
MIN_SD = 1e-9
ENCODER_VERSION = 1


@dataclass(frozen=True)
class FeatureConfig:
    columns: tuple[str, ...] = ALL_COLUMNS
    vocab_caps: dict[str, int | None] = field(default_factory=lambda: {"weather": 20, "state": None})

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        for col in self.columns:
            if col not in ALL_COLUMNS:
                raise UsageError(f"unknown feature column {col!r}")
        if len(set(self.columns)) != len(self.columns):
            raise UsageError("feature columns must be unique")

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureConfig":
        caps = {"weather": 20, "state": None}
        caps.update(data.get("vocab_caps", {}))
        return cls(columns=tuple(data.get("columns", ALL_COLUMNS)), vocab_caps=caps)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "vocab_caps": dict(self.vocab_caps)}


@dataclass(frozen=True)
class EncoderState:
    columns: tuple[str, ...]
    means: dict[str, float]
    sds: dict[str, float]
    vocabularies: dict[str, tuple[str, ...]]
    feature_names: tuple[str, ...]

    @property
    def width(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {
            "version": ENCODER_VERSION,
            "columns": list(self.columns),
            "means": self.means,
            "sds": self.sds,
            "vocabularies": {k: list(v) for k, v in self.vocabularies.items()},
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderState":
        if data.get("version") != ENCODER_VERSION:
            raise DataError("unsupported encoder version")
        return cls(
            columns=tuple(data["columns"]),
            means={k: float(v) for k, v in data["means"].items()},
            sds={k: float(v) for k, v in data["sds"].items()},
            vocabularies={k: tuple(v) for k, v in data["vocabularies"].items()},
            feature_names=tuple(data["feature_names"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EncoderState":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("feature matrix and labels are misaligned")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError("feature names do not match matrix width")
        if not np.all(np.isfinite(self.X)):
            raise DataError("feature matrix contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        ids = None if self.ids is None else tuple(self.ids[i] for i in rows)
        return FeatureMatrix(self.X[rows], self.y[rows], self.feature_names, ids)

    def binarized(self) -> "FeatureMatrix":
        """Relabel severities {1,2} -> 0 and {3,4} -> 1."""
        return FeatureMatrix(self.X, binarize_severity(self.y), self.feature_names, self.ids)

    def save(self, directory: str | Path, prefix: str) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        np.save(d / f"{prefix}_X.npy", self.X, allow_pickle=False)
        np.save(d / f"{prefix}_y.npy", self.y, allow_pickle=False)
        (d / f"{prefix}_ids.json").write_text(
            json.dumps({"feature_names": list(self.feature_names), "ids": list(self.ids or ())}) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory: str | Path, prefix: str) -> "FeatureMatrix":
        d = Path(directory)
        try:
            X = np.load(d / f"{prefix}_X.npy", allow_pickle=False)
            y = np.load(d / f"{prefix}_y.npy", allow_pickle=False)
            meta = json.loads((d / f"{prefix}_ids.json").read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise DataError(f"matrix {prefix!r} not found in {d}") from exc
        ids = tuple(meta["ids"]) if meta["ids"] else None
        return cls(X, y, tuple(meta["feature_names"]), ids)


def binarize_severity(y: np.ndarray) -> np.ndarray:
    return (np.asarray(y) >= 3).astype(np.int64)


def _category(record: CrashRecord, column: str) -> str:
    return record.state if column == "state" else record.weather


def _vocabulary(values: Sequence[str], cap: int | None) -> tuple[str, ...]:
    counts = Counter(values)
    ordered = sorted(counts, key=lambda v: (-counts[v], v))
    return tuple(ordered if cap is None else ordered[:cap])


def fit_encoder(train: Sequence[CrashRecord], config: FeatureConfig = FeatureConfig()) -> EncoderState:
    """Fit standardization parameters and vocabularies on training records."""
    if not train:
        raise EmptyDatasetError("empty training set")
    means: dict[str, float] = {}
    sds: dict[str, float] = {}
    vocabs: dict[str, tuple[str, ...]] = {}
    names: list[str] = []
    for col in config.columns:
        if col in NUMERIC_COLUMNS:
            values = np.array([getattr(r, col) for r in train], dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise DataError(f"column {col!r} has missing values; clean the data first")
            means[col] = float(values.mean())
            sds[col] = max(float(values.std()), MIN_SD)
            names.append(col)
        elif col == "hour":
            names += ["hour_sin", "hour_cos"]
        elif col in CATEGORICAL_COLUMNS:
            vocab = _vocabulary([_category(r, col) for r in train], config.vocab_caps.get(col))
            vocabs[col] = vocab
            names += [f"{col}={v}" for v in vocab] + [f"{col}={UNSEEN}"]
        else:
            names += [f"poi:{flag}" for flag in POI_FLAGS]
    if len(set(names)) != len(names):
        raise DataError("feature names collide")
    return EncoderState(tuple(config.columns), means, sds, vocabs, tuple(names))


def encode(records: Sequence[CrashRecord], state: EncoderState) -> FeatureMatrix:
    """Apply a fitted encoder; ``state`` is never modified."""
    n = len(records)
    blocks = []
    for col in state.columns:
        if col in NUMERIC_COLUMNS:
            values = np.array([getattr(r, col) for r in records], dtype=np.float64)
            blocks.append(((values - state.means[col]) / state.sds[col])[:, None])
        elif col == "hour":
            angle = 2.0 * math.pi * np.array([r.hour for r in records], dtype=np.float64) / 24.0
            blocks.append(np.column_stack([np.sin(angle), np.cos(angle)]))
        elif col in CATEGORICAL_COLUMNS:
            vocab = state.vocabularies[col]
            slot = {v: i for i, v in enumerate(vocab)}
            unseen = len(vocab)
            idx = np.array([slot.get(_category(r, col), unseen) for r in records], dtype=np.int64)
            onehot = np.zeros((n, unseen + 1))
            onehot[np.arange(n), idx] = 1.0
            blocks.append(onehot)
        else:
            blocks.append(np.array([[bool(f) for f in r.poi_flags] for r in records], dtype=np.float64).reshape(n, len(POI_FLAGS)))
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    y = np.array([r.severity for r in records], dtype=np.int64)
    return FeatureMatrix(X, y, state.feature_names, tuple(r.id for r in records))


# ---------------------------------------------------------------- binning


@dataclass(frozen=True)
class BinSpec:
    lower: float
    upper: float
    width: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper) and math.isfinite(self.width)):
            raise UsageError("bin edges must be finite")
        if self.width <= 0:
            raise UsageError("bin width must be positive")
        if self.lower >= self.upper:
            raise UsageError("bin lower edge must be below upper edge")

    @property
    def n_bins(self) -> int:
        return math.ceil((self.upper - self.lower) / self.width - 1e-9)

    def edge(self, i: int) -> float:
        return self.upper if i >= self.n_bins else self.lower + i * self.width

    def edges(self) -> list[float]:
        """Bin boundaries; the final edge is ``upper``."""
        return [self.edge(i) for i in range(self.n_bins + 1)]

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "width": self.width}


TEMPERATURE_BINS = BinSpec(-20.0, 110.0, 10.0)
PRESSURE_BINS = BinSpec(28.0, 31.0, 0.5)


def bin_index(value: float, spec: BinSpec) -> int | None:
    """Half-open bin containing ``value``; ``upper`` maps to the last bin.

    Returns ``None`` for values outside ``[lower, upper]`` or NaN.
    """
    if not spec.lower <= value <= spec.upper:
        return None
    last = spec.n_bins - 1
    i = math.floor((value - spec.lower) / spec.width)
    # correct floating error so that edges() inverts exactly
    i = min(max(i, 0), last)
    while i > 0 and value < spec.edge(i):
        i -= 1
    while i < last and value >= spec.edge(i + 1):
        i += 1
    return i


def bin_indices(values: np.ndarray, spec: BinSpec) -> np.ndarray:
    """Vectorized :func:`bin_index`; out-of-range entries become -1."""
    values = np.asarray(values, dtype=np.float64)
    edges = np.asarray(spec.edges())
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == spec.upper, spec.n_bins - 1, idx)
    inside = (values >= spec.lower) & (values <= spec.upper)
    return np.where(inside, idx, -1)

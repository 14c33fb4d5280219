"""Seeded stratified train/test split keyed on record ids."""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import UsageError
from .records import CrashRecord


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.25
    seed: int = 42
    stratify_by: str = "severity"

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise UsageError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.stratify_by != "severity":
            raise UsageError("only stratification by severity is supported")


def _rank_key(record_id: str, seed: int) -> bytes:
    h = hashlib.blake2b(record_id.encode("utf-8"), digest_size=16, key=seed.to_bytes(8, "little"))
    return h.digest()


def n_test_rows(n: int, fraction: float) -> int:
    """Rows of an n-row class that go to the test half (round half up, clamped)."""
    k = math.floor(n * fraction + 0.5)
    if n >= 2:
        k = min(max(k, 1), n - 1)
    return k


def stratified_split(
    records: Sequence[CrashRecord], spec: SplitSpec
) -> tuple[list[int], list[int]]:
    """Return sorted (train, test) positions into ``records``.

    Within each severity class rows are ranked by a keyed hash of their id, so
    which ids land in the test half depends only on ids, seed and fraction.
    """
    by_class: dict[int, list[int]] = defaultdict(list)
    for i, rec in enumerate(records):
        by_class[rec.severity].append(i)
    test: list[int] = []
    for cls in sorted(by_class):
        members = by_class[cls]
        ranked = sorted(members, key=lambda i: (_rank_key(records[i].id, spec.seed), records[i].id))
        test.extend(ranked[: n_test_rows(len(members), spec.test_fraction)])
    test_set = set(test)
    train = [i for i in range(len(records)) if i not in test_set]
    return train, sorted(test)


def write_split(path: str | Path, records: Sequence[CrashRecord], spec: SplitSpec) -> dict:
    train, test = stratified_split(records, spec)
    doc = {
        "seed": spec.seed,
        "test_fraction": spec.test_fraction,
        "stratify_by": spec.stratify_by,
        "train": sorted(records[i].id for i in train),
        "test": sorted(records[i].id for i in test),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return doc


def read_split(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not {"train", "test"} <= doc.keys():
        raise UsageError(f"{path} is not a split file")
    return doc

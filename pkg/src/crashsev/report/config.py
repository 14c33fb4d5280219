"""Run configuration: one JSON document; CLI flags override its fields."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import UsageError
from ..features import FeatureConfig
from ..ingest.clean import DEFAULT_CHUNK_ROWS
from ..ingest.split import SplitSpec

DEFAULT_MODELS = {
    "logistic": {"learning_rate": 0.1, "epochs": 300, "l2": 1e-4},
    "knn": {"k": 5},
    "forest": {"n_trees": 100, "max_depth": 12, "min_leaf": 5, "features_per_split": None},
}


def resolve_workers(value: int | None) -> int:
    """Explicit value, else ``CRASHSEV_WORKERS``, else 1."""
    if value is None:
        env = os.environ.get("CRASHSEV_WORKERS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise UsageError(f"CRASHSEV_WORKERS must be an integer, got {env!r}") from None
        else:
            value = 1
    if value < 1:
        raise UsageError("workers must be >= 1")
    return value


@dataclass
class RunConfig:
    input_csv: str
    output_dir: str
    store_dir: str | None = None
    matrix_dir: str | None = None
    models_dir: str | None = None
    test_fraction: float = 0.25
    seed: int = 42
    features: dict = field(default_factory=lambda: FeatureConfig().to_dict())
    models: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_MODELS)))
    binarize_severe: bool = False
    chunk_rows: int = DEFAULT_CHUNK_ROWS
    top_k: int = 10
    workers: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        models = json.loads(json.dumps(DEFAULT_MODELS))
        for kind, cfg in data.pop("models", {}).items():
            if kind not in models:
                raise UsageError(f"unknown model kind {kind!r} in config")
            models[kind].update(cfg)
        try:
            return cls(models=models, **data)
        except TypeError as exc:
            raise UsageError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def paths(self) -> dict[str, Path]:
        out = Path(self.output_dir)
        return {
            "output": out,
            "store": Path(self.store_dir) if self.store_dir else out / "store",
            "matrix": Path(self.matrix_dir) if self.matrix_dir else out / "matrix",
            "models": Path(self.models_dir) if self.models_dir else out / "models",
        }

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.seed)

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig.from_dict(self.features)

    def validate(self) -> None:
        if not Path(self.input_csv).is_file():
            raise UsageError(f"input CSV {self.input_csv} does not exist")
        out = Path(self.output_dir)
        if out.exists() and not out.is_dir():
            raise UsageError(f"output {out} exists and is not a directory")
        parent = next((p for p in [out, *out.parents] if p.exists()), None)
        if parent is None or not os.access(parent, os.W_OK):
            raise UsageError(f"output directory {out} cannot be created")
        self.split_spec()
        self.feature_config()
        if self.top_k < 1 or self.chunk_rows < 1:
            raise UsageError("top_k and chunk_rows must be >= 1")
        resolve_workers(self.workers)

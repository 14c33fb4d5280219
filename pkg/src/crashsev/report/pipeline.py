"""End-to-end run with content-hash stage caching.

Every stage declares input paths, output paths and a parameter blob. The run
manifest records, per stage, the parameter hash and the sha256 of every input
and output file. A stage is skipped when its recorded outputs are intact and
its parameters and current inputs match what was recorded.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .. import stages
from ..analytics import write_table
from ..errors import CrashsevError
from ..models import MODEL_KINDS
from .config import RunConfig, resolve_workers
from .svg import ChartSpec, write_chart

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
MANIFEST_VERSION = 1


class PipelineError(CrashsevError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class Stage:
    name: str
    inputs: list[Path]
    outputs: list[Path]
    params: dict
    run: Callable[[], None]


@dataclass
class PipelineResult:
    report_dir: Path
    executed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _params_hash(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()


class _Hasher:
    """Maps paths to manifest keys and hashes files (directories expand)."""

    def __init__(self, out: Path, external: dict[Path, str]):
        self.out = out.resolve()
        self.external = {p.resolve(): k for p, k in external.items()}

    def key(self, path: Path) -> str:
        path = path.resolve()
        for root, name in self.external.items():
            if path == root:
                return name
            if root in path.parents:
                return f"{name}/{path.relative_to(root).as_posix()}"
        try:
            return path.relative_to(self.out).as_posix()
        except ValueError:
            return path.as_posix()

    def files(self, paths: list[Path]) -> dict[str, str] | None:
        """Hashes of every file under ``paths``; None if any path is missing."""
        out: dict[str, str] = {}
        for p in paths:
            if p.is_dir():
                for f in sorted(x for x in p.rglob("*") if x.is_file()):
                    out[self.key(f)] = sha256_file(f)
            elif p.is_file():
                out[self.key(p)] = sha256_file(p)
            else:
                return None
        return dict(sorted(out.items()))


def _remove(paths: list[Path]) -> None:
    for p in paths:
        if p.is_dir():
            shutil.rmtree(p)
        elif p.exists():
            p.unlink()


def build_stages(config: RunConfig, workers: int) -> list[Stage]:
    p = config.paths()
    out, store, matrix, models = p["output"], p["store"], p["matrix"], p["models"]
    csv_path = Path(config.input_csv)
    cleaning = out / "cleaning_report.json"
    split_file = out / "split.json"
    matrix_files = [matrix / "encoder.json"] + [
        matrix / f"{part}_{suffix}" for part in ("train", "test") for suffix in ("X.npy", "y.npy", "ids.json")
    ]
    train_files = [f for f in matrix_files if f.name.startswith("train_")]
    test_files = [f for f in matrix_files if f.name.startswith("test_")]
    eval_dir = out / "eval"
    analytics_dir = out / "analytics"
    chart_dir = out / "charts"

    def ingest():
        stages.ingest_csv(csv_path, store, overwrite=True, chunk_rows=config.chunk_rows,
                          workers=workers, report_path=cleaning)

    def split():
        stages.make_split(store, config.split_spec(), split_file)

    def encode_():
        stages.encode_matrices(store, split_file, config.feature_config(), matrix)

    result = [
        Stage("ingest", [csv_path], [store, cleaning], {"chunk_rows": config.chunk_rows}, ingest),
        Stage("split", [store], [split_file], {"test_fraction": config.test_fraction, "seed": config.seed}, split),
        Stage("encode", [store, split_file], matrix_files, {"features": config.features}, encode_),
    ]

    for kind in MODEL_KINDS:
        model_file = models / f"{kind}.json"
        eval_file = eval_dir / f"{kind}.json"
        params = {"config": config.models.get(kind, {}), "seed": config.seed, "binarize": config.binarize_severe}

        def train(kind=kind, model_file=model_file):
            models.mkdir(parents=True, exist_ok=True)
            stages.train_model(kind, matrix, model_file, config.models.get(kind), seed=config.seed,
                               binarize=config.binarize_severe, workers=workers)

        def evaluate(model_file=model_file, eval_file=eval_file):
            eval_dir.mkdir(parents=True, exist_ok=True)
            doc = stages.evaluation_bundle(model_file, matrix, workers=workers)
            eval_file.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")

        result.append(Stage(f"train_{kind}", train_files, [model_file], params, train))
        # kNN predictions read the training matrix through the model file
        eval_inputs = [model_file, *test_files] + (train_files if kind == "knn" else [])
        result.append(Stage(f"evaluate_{kind}", eval_inputs, [eval_file], {}, evaluate))

    reports = stages.ANALYSIS_REPORTS
    analytics_files = [analytics_dir / f"{r}.json" for r in reports] + [analytics_dir / f"{r}.csv" for r in reports]

    def analyze():
        analytics_dir.mkdir(parents=True, exist_ok=True)
        for r in reports:
            top = config.top_k if r in ("states", "weather") else None
            table = stages.analyze(store, r, top_k=top, workers=workers)
            write_table(table, analytics_dir / f"{r}.json")
            write_table(table, analytics_dir / f"{r}.csv")

    result.append(Stage("analyze", [store], analytics_files, {"top_k": config.top_k}, analyze))

    chart_files = [chart_dir / f"{n}.svg" for n in CHART_NAMES]
    eval_files = [eval_dir / f"{k}.json" for k in MODEL_KINDS]

    def render():
        chart_dir.mkdir(parents=True, exist_ok=True)
        for name, spec in chart_specs(analytics_dir, eval_dir).items():
            write_chart(spec, chart_dir / f"{name}.svg")

    result.append(Stage("render", [analytics_dir / f"{r}.json" for r in reports] + eval_files,
                        chart_files, {"charts": list(CHART_NAMES)}, render))
    return result


CHART_NAMES = ("states", "weather", "years", "hours", "roc", "pr")


def chart_specs(analytics_dir: Path, eval_dir: Path) -> dict[str, ChartSpec]:
    def table(name):
        return json.loads((analytics_dir / f"{name}.json").read_text(encoding="utf-8"))

    def pairs(name):
        return tuple((str(r["value"]), r["count"]) for r in table(name)["rows"])

    hours = {int(r["value"]): r["count"] for r in table("hours")["rows"]}
    roc, pr = [], []
    for kind in MODEL_KINDS:
        doc = json.loads((eval_dir / f"{kind}.json").read_text(encoding="utf-8"))
        curves = doc["binarized"]["curves"]["severe"]
        if curves["roc"] is not None:
            c = curves["roc"]
            roc.append((f"{kind} (AUC {c['area']:.3f})", tuple(zip(c["x"], c["y"]))))
        if curves["pr"] is not None:
            c = curves["pr"]
            pr.append((f"{kind} (AP {c['area']:.3f})", tuple(zip(c["x"], c["y"]))))
    specs = {
        "states": ChartSpec("bar", "Top states by accident count", data=pairs("states"),
                            x_label="State", y_label="Accidents"),
        "weather": ChartSpec("bar", "Top weather conditions", data=pairs("weather"),
                             x_label="Weather", y_label="Accidents"),
        "years": ChartSpec("pie", "Accidents per year", data=tuple(sorted(pairs("years")))),
        "hours": ChartSpec("line", "Accidents by hour of day",
                           series=(("", tuple((h, hours.get(h, 0)) for h in range(24))),),
                           x_label="Hour", y_label="Accidents"),
        "roc": ChartSpec("line", "ROC, severe (3-4) vs rest", series=tuple(roc),
                         x_label="False positive rate", y_label="True positive rate"),
        "pr": ChartSpec("line", "Precision-recall, severe (3-4) vs rest", series=tuple(pr),
                        x_label="Recall", y_label="Precision"),
    }
    return specs


def _load_manifest(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}
    return doc if doc.get("version") == MANIFEST_VERSION else {}


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Run ingest, split, encode, train, evaluate, analyze and render.

    Returns which stages ran and which were reused. On failure the failing
    stage's outputs are deleted and PipelineError names the stage.
    """
    config.validate()
    workers = resolve_workers(config.workers)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    hasher = _Hasher(out, {Path(config.input_csv): "@input_csv"})
    previous = _load_manifest(out / MANIFEST).get("stages", {})
    plan = build_stages(config, workers)

    # staleness is judged on disk state before anything runs, so a stage whose
    # recorded input disappeared reruns even if an upstream rerun recreates it
    stale = set()
    for st in plan:
        rec = previous.get(st.name)
        if (
            rec is None
            or rec.get("params") != _params_hash(st.params)
            or hasher.files(st.outputs) != rec.get("outputs")
            or hasher.files(st.inputs) != rec.get("inputs")
        ):
            stale.add(st.name)

    result = PipelineResult(out)
    records: dict[str, dict] = {}
    for st in plan:
        inputs = hasher.files(st.inputs)
        rec = previous.get(st.name)
        if st.name not in stale and rec is not None and inputs == rec.get("inputs"):
            records[st.name] = rec
            result.skipped.append(st.name)
            continue
        logger.info("running stage %s", st.name)
        _remove(st.outputs)
        try:
            if inputs is None:
                raise FileNotFoundError(f"missing inputs for stage {st.name}")
            st.run()
            outputs = hasher.files(st.outputs)
            if outputs is None:
                raise FileNotFoundError(f"stage {st.name} did not produce all outputs")
        except Exception as exc:
            _remove(st.outputs)
            raise PipelineError(st.name, exc) from exc
        records[st.name] = {"params": _params_hash(st.params), "inputs": inputs, "outputs": outputs}
        result.executed.append(st.name)

    artifacts: dict[str, str] = {}
    for rec in records.values():
        artifacts.update(rec["outputs"])
    manifest = {
        "version": MANIFEST_VERSION,
        "config": _portable_config(config),
        "artifacts": dict(sorted(artifacts.items())),
        "stages": records,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    result.manifest = manifest
    return result


def _portable_config(config: RunConfig) -> dict:
    d = config.to_dict()
    d.pop("workers", None)  # results do not depend on the worker count
    return d

"""File-to-file operations behind each CLI subcommand and pipeline stage."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from . import analytics
from .errors import DataError, UsageError
from .features import PRESSURE_BINS, TEMPERATURE_BINS, EncoderState, FeatureConfig, FeatureMatrix, encode, fit_encoder
from .ingest import SplitSpec, clean_dataset, iter_csv, read_split, read_store, write_split, write_store
from .ingest.clean import DEFAULT_CHUNK_ROWS, CleaningReport
from .metrics import EvaluationReport, evaluate
from .models import MODEL_KINDS, ForestModel, feature_importance, fit, load_model, predict_proba, save_model

logger = logging.getLogger(__name__)

ANALYSIS_REPORTS = ("states", "years", "hours", "weather", "temp-hist", "pressure-hist")


def ingest_csv(
    input_csv: str | Path,
    store: str | Path,
    overwrite: bool = False,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    workers: int = 1,
    report_path: str | Path | None = None,
) -> CleaningReport:
    records, report = clean_dataset(iter_csv(input_csv), chunk_rows=chunk_rows)
    write_store(records, store, overwrite=overwrite, workers=workers)
    target = Path(report_path) if report_path else Path(store) / "cleaning_report.json"
    target.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("ingested %d rows (%d dropped)", report.rows_kept, report.rows_dropped)
    return report


def _sorted_records(store):
    return sorted(read_store(store), key=lambda r: r.id)


def make_split(store: str | Path, spec: SplitSpec, out: str | Path) -> dict:
    return write_split(out, _sorted_records(store), spec)


def encode_matrices(
    store: str | Path, split_file: str | Path, config: FeatureConfig, out_dir: str | Path
) -> EncoderState:
    """Fit the encoder on the split's train ids; write train and test matrices."""
    split = read_split(split_file)
    by_id = {r.id: r for r in read_store(store)}
    try:
        train = [by_id[i] for i in split["train"]]
        test = [by_id[i] for i in split["test"]]
    except KeyError as exc:
        raise DataError(f"split refers to id {exc.args[0]!r} missing from the store") from None
    state = fit_encoder(train, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state.save(out / "encoder.json")
    encode(train, state).save(out, "train")
    encode(test, state).save(out, "test")
    return state


def train_model(
    kind: str,
    matrix_dir: str | Path,
    out: str | Path,
    config: dict | None = None,
    seed: int | None = None,
    binarize: bool = False,
    workers: int = 1,
):
    if kind not in MODEL_KINDS:
        raise UsageError(f"unknown model kind {kind!r}")
    fm = FeatureMatrix.load(matrix_dir, "train")
    if binarize:
        fm = fm.binarized()
    try:
        model = fit(kind, fm.X, fm.y, config, seed=seed, workers=workers, feature_names=fm.feature_names)
    except TypeError as exc:
        raise UsageError(f"bad {kind} config: {exc}") from exc
    save_model(model, out, matrix_dir if kind == "knn" else None, binarized=binarize)
    return model


def _test_matrix(model, matrix_dir) -> FeatureMatrix:
    fm = FeatureMatrix.load(matrix_dir, "test")
    if set(model.classes) <= {0, 1}:
        fm = fm.binarized()
    return fm


def predict_file(model_file: str | Path, matrix_dir: str | Path, out_csv: str | Path, workers: int = 1) -> None:
    model = load_model(model_file)
    fm = _test_matrix(model, matrix_dir)
    proba = predict_proba(model, fm.X, workers=workers)
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "actual", "predicted", *(f"p_{c}" for c in model.classes)])
        ids = fm.ids or tuple(str(i) for i in range(fm.n_rows))
        for i in range(fm.n_rows):
            row = proba[i]
            pred = model.classes[int(row.argmax())]
            w.writerow([ids[i], int(fm.y[i]), pred, *(repr(float(p)) for p in row)])


def evaluate_file(model_file: str | Path, matrix_dir: str | Path, mode: str = "multiclass", workers: int = 1) -> EvaluationReport:
    model = load_model(model_file)
    fm = _test_matrix(model, matrix_dir)
    proba = predict_proba(model, fm.X, workers=workers)
    return evaluate(proba, fm.y, model.classes, mode)


def evaluation_bundle(model_file: str | Path, matrix_dir: str | Path, workers: int = 1) -> dict:
    """Multiclass and binarized reports (plus forest importances) in one document."""
    model = load_model(model_file)
    fm = _test_matrix(model, matrix_dir)
    proba = predict_proba(model, fm.X, workers=workers)
    doc = {
        "multiclass": evaluate(proba, fm.y, model.classes, "multiclass").to_dict(),
        "binarized": evaluate(proba, fm.y, model.classes, "binarized").to_dict(),
    }
    if isinstance(model, ForestModel):
        imp = feature_importance(model)
        doc["feature_importance"] = {"no_splits": imp.no_splits, "ranking": [list(p) for p in imp.ranking]}
    return doc


def analyze(store: str | Path, report: str, top_k: int | None = None, workers: int = 1):
    keys = {"states": "state", "years": "year", "hours": "hour", "weather": "weather"}
    if report in keys:
        return analytics.count_by(store, keys[report], top_k=top_k, workers=workers)
    if report == "temp-hist":
        return analytics.severity_histogram(store, "temperature_f", TEMPERATURE_BINS)
    if report == "pressure-hist":
        return analytics.severity_histogram(store, "pressure_in", PRESSURE_BINS)
    raise UsageError(f"unknown report {report!r}; choose from {ANALYSIS_REPORTS}")

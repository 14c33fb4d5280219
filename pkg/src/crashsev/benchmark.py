"""Headline checks on the full public accidents CSV.

``model_accuracies`` trains the three classifiers with default settings on a
stratified sample and reports their weighted test metrics. ``dataset_findings``
computes the exploratory facts (state ranking, pressure and temperature bands,
severe-accident peak hour, modal severity) from an ingested store.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import analytics
from .features import PRESSURE_BINS, TEMPERATURE_BINS, encode, fit_encoder
from .ingest import SplitSpec, clean_dataset, iter_csv, stratified_split, write_store
from .metrics import evaluate
from .models import fit, predict_proba
from .report.config import DEFAULT_MODELS

logger = logging.getLogger(__name__)

DATASET_ENV = "CRASHSEV_DATASET"


def stratified_sample(records, n_rows: int, seed: int = 42) -> list:
    """Severity-stratified subset of about ``n_rows`` records, ordered by id."""
    records = sorted(records, key=lambda r: r.id)
    if n_rows >= len(records):
        return records
    _, chosen = stratified_split(records, SplitSpec(n_rows / len(records), seed))
    return [records[i] for i in chosen]


def model_accuracies(
    csv_path: str | Path,
    sample_rows: int = 100_000,
    seed: int = 42,
    test_fraction: float = 0.25,
    workers: int = 1,
) -> dict[str, dict]:
    """Weighted test metrics per model kind on a stratified sample of the CSV."""
    records, report = clean_dataset(iter_csv(csv_path))
    logger.info("cleaned %d of %d rows", report.rows_kept, report.rows_read)
    sample = stratified_sample(records, sample_rows, seed)
    del records
    train_idx, test_idx = stratified_split(sample, SplitSpec(test_fraction, seed))
    train = [sample[i] for i in train_idx]
    test = [sample[i] for i in test_idx]
    state = fit_encoder(train)
    fm_train, fm_test = encode(train, state), encode(test, state)
    out = {}
    for kind, cfg in DEFAULT_MODELS.items():
        model = fit(kind, fm_train.X, fm_train.y, cfg, seed=seed, workers=workers,
                    feature_names=fm_train.feature_names)
        proba = predict_proba(model, fm_test.X, workers=workers)
        rep = evaluate(proba, fm_test.y, model.classes)
        out[kind] = {"accuracy": rep.metrics.accuracy, **rep.metrics.weighted}
        logger.info("%s: accuracy %.4f", kind, rep.metrics.accuracy)
    return out


def ingest_store(csv_path: str | Path, store: str | Path, workers: int = 1) -> None:
    records, _ = clean_dataset(iter_csv(csv_path))
    write_store(records, store, overwrite=True, workers=workers)


def dataset_findings(store: str | Path, workers: int = 1) -> dict:
    states = analytics.count_by(store, "state", workers=workers)
    pressure = analytics.severity_histogram(store, "pressure_in", PRESSURE_BINS)
    temperature = analytics.severity_histogram(store, "temperature_f", TEMPERATURE_BINS)
    severe_hours = analytics.severe_hourly_counts(store)
    years = analytics.count_by(store, "year", workers=workers)

    # severity-2 mass in every run of two 0.5-inHg bins
    windows = analytics.window_sums(pressure.severity_counts(2), 2)
    start = PRESSURE_BINS.edges().index(29.5)
    others = np.delete(windows, start)

    sev2_temp = temperature.severity_counts(2)
    edges = TEMPERATURE_BINS.edges()
    band = [i for i in range(TEMPERATURE_BINS.n_bins) if 40.0 <= edges[i] and edges[i + 1] <= 80.0]
    inside = int(sev2_temp[band].sum())
    outside = int(sev2_temp.sum()) - inside + temperature.out_of_range_by_severity[1]

    by_severity = np.zeros(4, dtype=np.int64)
    for _, _, s in years.rows:
        by_severity += np.array(s)
    return {
        "top_states": [v for v, _, _ in states.rows[:3]],
        "pressure_window": int(windows[start]),
        "pressure_best_other": int(others.max()) if others.size else 0,
        "temperature_inside": inside,
        "temperature_outside": outside,
        "severe_peak_hour": int(np.argmax(severe_hours)),
        "modal_severity": int(np.argmax(by_severity)) + 1,
        "rows": int(by_severity.sum()),
    }

"""Confusion matrices, summary metrics, ROC and precision-recall curves."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyDatasetError, UsageError

SEVERE_CLASSES = (3, 4)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i][j]`` = rows of actual class i predicted as class j."""

    classes: tuple
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def binary_cells(self, positive=None) -> dict[str, int]:
        """TP/FP/FN/TN with respect to ``positive`` (default: the last class)."""
        if len(self.classes) != 2:
            raise UsageError("binary cells need exactly two classes")
        p = self.classes.index(self.classes[-1] if positive is None else positive)
        q = 1 - p
        m = self.counts
        return {"TP": m[p][p], "FP": m[q][p], "FN": m[p][q], "TN": m[q][q]}

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionMatrix":
        return cls(tuple(d["classes"]), tuple(tuple(r) for r in d["counts"]))


def confusion(actual: Sequence, predicted: Sequence, classes: Sequence) -> ConfusionMatrix:
    actual = list(actual)
    predicted = list(predicted)
    if len(actual) != len(predicted):
        raise DataError(f"label lengths differ: {len(actual)} vs {len(predicted)}")
    classes = tuple(classes)
    pos = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    m = [[0] * k for _ in range(k)]
    for a, p in zip(actual, predicted):
        try:
            m[pos[a]][pos[p]] += 1
        except KeyError as exc:
            raise DataError(f"label {exc.args[0]!r} not in class list {classes}") from None
    return ConfusionMatrix(classes, tuple(tuple(r) for r in m))


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: list[str] = field(default_factory=list)


@dataclass
class MetricsReport:
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro: dict[str, float]
    weighted: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            d["accuracy"],
            {k: ClassMetrics(**v) for k, v in d["per_class"].items()},
            dict(d["macro"]),
            dict(d["weighted"]),
        )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def summary(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus per-class, macro and support-weighted precision/recall/F1.

    Undefined ratios are reported as 0 and named in ``zero_division``.
    """
    total = cm.total
    if total == 0:
        raise EmptyDatasetError("empty confusion matrix")
    m = cm.counts
    k = len(cm.classes)
    col = [sum(m[i][j] for i in range(k)) for j in range(k)]
    per_class: dict[str, ClassMetrics] = {}
    for i, c in enumerate(cm.classes):
        row = sum(m[i])
        flags = []
        if col[i] == 0:
            flags.append("precision")
        if row == 0:
            flags.append("recall")
        p = _ratio(m[i][i], col[i])
        r = _ratio(m[i][i], row)
        if p + r == 0:
            f1 = 0.0
            flags.append("f1")
        else:
            f1 = 2 * p * r / (p + r)
        per_class[str(c)] = ClassMetrics(p, r, f1, row, flags)
    keys = ("precision", "recall", "f1")
    macro = {key: sum(getattr(v, key) for v in per_class.values()) / k for key in keys}
    weighted = {
        key: sum(getattr(v, key) * v.support for v in per_class.values()) / total for key in keys
    }
    accuracy = sum(m[i][i] for i in range(k)) / total
    return MetricsReport(accuracy, per_class, macro, weighted)


@dataclass
class Curve:
    kind: str  # "roc" or "pr"
    x: list[float]
    y: list[float]
    thresholds: list[float]  # inf marks the anchor point before any threshold
    area: float
    positive: object = 1

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x, self.y))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = [None if math.isinf(t) else t for t in self.thresholds]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        d = dict(d)
        d["thresholds"] = [math.inf if t is None else t for t in d["thresholds"]]
        return cls(**d)


def _threshold_counts(actual, scores):
    """Cumulative (tp, fp) after each distinct score, highest score first."""
    y = np.asarray(actual).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise DataError("labels and scores differ in length")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    return s[ends], tp.astype(np.int64), fp.astype(np.int64), int(y.sum()), int((~y).sum())


def roc_curve(actual: Sequence, scores: Sequence[float], positive=1) -> Curve:
    """ROC curve over descending distinct scores, AUC by the trapezoid rule.

    ``actual`` holds booleans (or 0/1): True marks the positive class.
    """
    thr, tp, fp, n_pos, n_neg = _threshold_counts(actual, scores)
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC undefined: actual labels contain a single class")
    tp = np.r_[0, tp]
    fp = np.r_[0, fp]
    # integer numerator keeps the area exact up to the final division
    area_num = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    area = area_num / (2 * n_pos * n_neg)
    return Curve(
        "roc",
        (fp / n_neg).tolist(),
        (tp / n_pos).tolist(),
        [math.inf, *thr.tolist()],
        area,
        positive,
    )


def pr_curve(actual: Sequence, scores: Sequence[float], positive=1) -> Curve:
    """Precision-recall curve; area is average precision sum((R_i - R_{i-1}) P_i).

    The recall-0 anchor takes the precision of the first threshold that
    admits a positive.
    """
    thr, tp, fp, n_pos, _ = _threshold_counts(actual, scores)
    if n_pos == 0:
        raise DataError("PR curve undefined: no positive examples")
    precision = tp / (tp + fp)
    recall = tp / n_pos
    first_hit = int(np.flatnonzero(tp > 0)[0])
    p0 = float(precision[first_hit])
    prev_recall = np.r_[0.0, recall[:-1]]
    ap = float(np.sum((recall - prev_recall) * precision))
    return Curve(
        "pr",
        [0.0, *recall.tolist()],
        [p0, *precision.tolist()],
        [math.inf, *thr.tolist()],
        ap,
        positive,
    )


# ---------------------------------------------------------------- evaluation


@dataclass
class EvaluationReport:
    mode: str
    classes: list
    confusion: ConfusionMatrix
    metrics: MetricsReport
    curves: dict[str, dict[str, Curve | None]]
    macro_auc: float | None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "classes": list(self.classes),
            "confusion": self.confusion.to_dict(),
            "metrics": self.metrics.to_dict(),
            "curves": {
                c: {k: (v.to_dict() if v is not None else None) for k, v in pair.items()}
                for c, pair in self.curves.items()
            },
            "macro_auc": self.macro_auc,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            d["mode"],
            list(d["classes"]),
            ConfusionMatrix.from_dict(d["confusion"]),
            MetricsReport.from_dict(d["metrics"]),
            {
                c: {k: (Curve.from_dict(v) if v is not None else None) for k, v in pair.items()}
                for c, pair in d["curves"].items()
            },
            d["macro_auc"],
            list(d.get("notes", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _curve_pair(actual_bool, scores, positive, notes: list[str]):
    pair: dict[str, Curve | None] = {}
    for kind, fn in (("roc", roc_curve), ("pr", pr_curve)):
        try:
            pair[kind] = fn(actual_bool, scores, positive)
        except DataError as exc:
            pair[kind] = None
            notes.append(f"class {positive}: {kind} skipped ({exc})")
    return pair


def evaluate(
    proba: np.ndarray,
    actual: Sequence[int],
    classes: Sequence[int],
    mode: str = "multiclass",
) -> EvaluationReport:
    """Score a model's probability matrix against true labels.

    ``multiclass``: argmax predictions, one-vs-rest curves per class and their
    macro-average AUC. ``binarized``: severe (3, 4) versus the rest, scored by
    the probability mass on severe classes; a model already trained on 0/1
    labels is scored by the probability of class 1.
    """
    proba = np.asarray(proba, dtype=np.float64)
    actual = np.asarray(actual)
    classes = [int(c) for c in classes]
    if proba.ndim != 2 or proba.shape != (actual.shape[0], len(classes)):
        raise DataError("probability matrix does not match labels and classes")
    notes: list[str] = []
    if mode == "multiclass":
        predicted = np.array(classes)[np.argmax(proba, axis=1)]
        cm = confusion(actual.tolist(), predicted.tolist(), classes)
        curves = {str(c): _curve_pair(actual == c, proba[:, j], c, notes) for j, c in enumerate(classes)}
        aucs = [p["roc"].area for p in curves.values() if p["roc"] is not None]
        macro_auc = sum(aucs) / len(aucs) if aucs else None
        return EvaluationReport(mode, classes, cm, summary(cm), curves, macro_auc, notes)
    if mode == "binarized":
        if set(classes) <= {0, 1}:
            severe_cols = [j for j, c in enumerate(classes) if c == 1]
            truth = actual == 1
        else:
            severe_cols = [j for j, c in enumerate(classes) if c in SEVERE_CLASSES]
            truth = np.isin(actual, SEVERE_CLASSES)
        score = proba[:, severe_cols].sum(axis=1) if severe_cols else np.zeros(actual.shape[0])
        predicted = (score >= 0.5).astype(int)
        cm = confusion(truth.astype(int).tolist(), predicted.tolist(), [0, 1])
        curves = {"severe": _curve_pair(truth, score, 1, notes)}
        roc = curves["severe"]["roc"]
        return EvaluationReport(mode, [0, 1], cm, summary(cm), curves, roc.area if roc else None, notes)
    raise UsageError(f"unknown evaluation mode {mode!r}")

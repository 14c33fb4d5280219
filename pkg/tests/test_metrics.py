import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashsev.errors import DataError, EmptyDatasetError
from crashsev.metrics import (
    ConfusionMatrix,
    EvaluationReport,
    confusion,
    evaluate,
    pr_curve,
    roc_curve,
    summary,
)

from oracles import direct_metrics, enumerated_average_precision, mann_whitney_auc


def test_confusion_perfect_binary():
    cm = confusion([1, 0], [1, 0], [0, 1])
    assert cm.counts == ((1, 0), (0, 1))
    assert cm.binary_cells() == {"TP": 1, "FP": 0, "FN": 0, "TN": 1}


def test_confusion_one_of_each_cell():
    cm = confusion([1, 1, 0, 0], [1, 0, 1, 0], [0, 1])
    assert cm.binary_cells(positive=1) == {"TP": 1, "FP": 1, "FN": 1, "TN": 1}


def test_confusion_rejects_bad_input():
    with pytest.raises(DataError):
        confusion([1, 2], [1], [1, 2])
    with pytest.raises(DataError):
        confusion([1, 5], [1, 1], [1, 2])


def test_confusion_row_sums_are_class_counts():
    rng = np.random.default_rng(0)
    actual = rng.integers(1, 5, 500).tolist()
    predicted = rng.integers(1, 5, 500).tolist()
    cm = confusion(actual, predicted, [1, 2, 3, 4])
    assert cm.total == 500
    for i, c in enumerate((1, 2, 3, 4)):
        assert sum(cm.counts[i]) == actual.count(c)
        assert sum(row[i] for row in cm.counts) == predicted.count(c)


def test_summary_perfect():
    rep = summary(confusion([1, 0], [1, 0], [0, 1]))
    assert rep.accuracy == 1.0
    for m in rep.per_class.values():
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)


def test_summary_one_of_each():
    rep = summary(confusion([1, 1, 0, 0], [1, 0, 1, 0], [0, 1]))
    assert rep.accuracy == 0.5
    m = rep.per_class["1"]
    assert (m.precision, m.recall, m.f1) == (0.5, 0.5, 0.5)


def test_f1_is_harmonic_mean_of_table_values():
    # precision 0.69 and recall 0.68 as printed for the logistic model
    f1 = 2 * 0.69 * 0.68 / (0.69 + 0.68)
    assert round(f1, 4) == 0.6850
    cm = ConfusionMatrix((0, 1), ((900, 31), (32, 68)))
    rep = summary(cm)
    p, r = 68 / 99, 68 / 100
    assert rep.per_class["1"].f1 == pytest.approx(2 * p * r / (p + r), abs=1e-15)


def test_summary_zero_division_flags():
    rep = summary(confusion([0, 0, 0], [0, 0, 0], [0, 1]))
    m = rep.per_class["1"]
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert set(m.zero_division) == {"precision", "recall", "f1"}


def test_summary_empty_matrix():
    with pytest.raises(EmptyDatasetError):
        summary(ConfusionMatrix((0, 1), ((0, 0), (0, 0))))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=200))
def test_summary_matches_direct_counting(pairs):
    actual = [a for a, _ in pairs]
    predicted = [p for _, p in pairs]
    rep = summary(confusion(actual, predicted, [1, 2, 3, 4]))
    acc, per = direct_metrics(actual, predicted, [1, 2, 3, 4])
    assert rep.accuracy == acc
    for c, (p, r, f1, sup) in per.items():
        m = rep.per_class[str(c)]
        assert (m.precision, m.recall, m.f1, m.support) == (p, r, f1, sup)
        for v in (m.precision, m.recall, m.f1):
            assert 0.0 <= v <= 1.0


def test_roc_perfect_and_uninformative():
    assert roc_curve([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]).area == 1.0
    c = roc_curve([0, 1, 0, 1], [0.5] * 4)
    assert c.area == 0.5
    assert c.points == [(0.0, 0.0), (1.0, 1.0)]


def test_roc_single_class_is_undefined():
    with pytest.raises(DataError, match="ROC undefined"):
        roc_curve([1, 1, 1], [0.1, 0.2, 0.3])


def test_pr_perfect_and_uniform():
    c = pr_curve([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9])
    assert c.area == 1.0
    assert all(p == 1.0 for p in c.y[:3])
    prevalence = pr_curve([1, 0, 0, 0, 1, 0, 0, 0, 0, 0], [0.3] * 10)
    assert prevalence.area == pytest.approx(0.2, abs=1e-15)


def test_pr_needs_a_positive():
    with pytest.raises(DataError):
        pr_curve([0, 0], [0.1, 0.2])


def test_pr_anchor_uses_first_positive_precision():
    # the top-scoring row is negative, so the anchor precision is 1/2
    c = pr_curve([0, 1, 0], [0.9, 0.8, 0.1])
    assert c.x[0] == 0.0 and c.y[0] == c.y[2] == 0.5


labels_scores = st.integers(2, 200).flatmap(
    lambda n: st.tuples(
        st.lists(st.booleans(), min_size=n, max_size=n).filter(lambda l: any(l) and not all(l)),
        st.lists(st.integers(0, 20).map(lambda v: v / 20), min_size=n, max_size=n),
    )
)


@settings(max_examples=150, deadline=None)
@given(labels_scores)
def test_auc_equals_mann_whitney(data):
    labels, scores = data
    assert abs(roc_curve(labels, scores).area - mann_whitney_auc(labels, scores)) <= 1e-12


@settings(max_examples=150, deadline=None)
@given(labels_scores)
def test_ap_equals_threshold_enumeration(data):
    labels, scores = data
    assert abs(pr_curve(labels, scores).area - enumerated_average_precision(labels, scores)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(labels_scores)
def test_curves_are_monotone(data):
    labels, scores = data
    roc = roc_curve(labels, scores)
    assert roc.points[0] == (0.0, 0.0) and roc.points[-1] == (1.0, 1.0)
    assert all(a <= b for a, b in zip(roc.x, roc.x[1:]))
    assert all(a <= b for a, b in zip(roc.y, roc.y[1:]))
    pr = pr_curve(labels, scores)
    assert all(a <= b for a, b in zip(pr.x, pr.x[1:]))
    assert pr.x[-1] == 1.0


@settings(max_examples=100, deadline=None)
@given(labels_scores, st.randoms(use_true_random=False))
def test_joint_permutation_and_monotone_transform(data, rnd):
    labels, scores = data
    order = list(range(len(labels)))
    rnd.shuffle(order)
    pl = [labels[i] for i in order]
    ps = [scores[i] for i in order]
    transformed = [math.exp(3 * s) - 7 for s in ps]
    base_roc, base_pr = roc_curve(labels, scores), pr_curve(labels, scores)
    for s in (ps, transformed):
        assert roc_curve(pl, s).area == base_roc.area
        assert pr_curve(pl, s).area == base_pr.area
        assert roc_curve(pl, s).points == base_roc.points
        assert pr_curve(pl, s).points == base_pr.points


def test_evaluate_majority_predictor():
    actual = np.array([0] * 90 + [1] * 10)
    proba = np.tile([0.8, 0.2], (100, 1))
    rep = evaluate(proba, actual, [0, 1])
    assert rep.metrics.accuracy == 0.9
    assert rep.metrics.per_class["1"].recall == 0.0


def test_evaluate_is_pure():
    rng = np.random.default_rng(3)
    proba = rng.dirichlet(np.ones(4), 50)
    actual = rng.integers(1, 5, 50)
    a = evaluate(proba, actual, [1, 2, 3, 4]).to_json()
    b = evaluate(proba.copy(), actual.copy(), [1, 2, 3, 4]).to_json()
    assert a == b


def test_evaluate_binarized_uses_severe_mass():
    actual = np.array([1, 2, 3, 4])
    proba = np.array([[0.7, 0.1, 0.1, 0.1], [0.1, 0.7, 0.1, 0.1], [0.1, 0.1, 0.7, 0.1], [0.1, 0.1, 0.1, 0.7]])
    rep = evaluate(proba, actual, [1, 2, 3, 4], mode="binarized")
    assert rep.confusion.binary_cells(positive=1) == {"TP": 2, "FP": 0, "FN": 0, "TN": 2}
    assert rep.curves["severe"]["roc"].area == 1.0


def test_evaluation_report_round_trip():
    rng = np.random.default_rng(5)
    proba = rng.dirichlet(np.ones(3), 80)
    actual = rng.integers(1, 4, 80)
    for mode in ("multiclass", "binarized"):
        rep = evaluate(proba, actual, [1, 2, 3], mode=mode)
        again = EvaluationReport.from_dict(json.loads(rep.to_json()))
        assert again == rep
        assert again.to_json() == rep.to_json()


def test_evaluate_skips_curves_for_absent_class():
    proba = np.array([[0.6, 0.4], [0.3, 0.7]])
    rep = evaluate(proba, np.array([1, 1]), [1, 2])
    assert rep.curves["1"]["roc"] is None
    assert rep.notes

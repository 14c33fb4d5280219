"""CART trees with Gini impurity and a bagged random forest built from them."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ..errors import DataError, EmptyDatasetError, UsageError


@dataclass(frozen=True)
class Leaf:
    counts: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    decrease: float
    n_samples: int
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 12
    min_leaf: int = 5
    features_per_split: int | None = None  # None: ceil(sqrt(n_features))

    def __post_init__(self):
        if self.max_depth < 1:
            raise UsageError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise UsageError("min_leaf must be >= 1")

    def resolve_features(self, n_features: int) -> int:
        m = self.features_per_split or math.ceil(math.sqrt(n_features))
        if not 1 <= m <= n_features:
            raise UsageError(f"features_per_split must lie in [1, {n_features}], got {m}")
        return m


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 5
    features_per_split: int | None = None
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self):
        if self.n_trees < 1:
            raise UsageError("n_trees must be >= 1")
        self.tree_config()

    def tree_config(self) -> TreeConfig:
        return TreeConfig(self.max_depth, self.min_leaf, self.features_per_split)


def gini(counts: Sequence[float]) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def best_split(
    X: np.ndarray,
    Y1: np.ndarray,
    idx: np.ndarray,
    features: Sequence[int],
    min_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity decrease) over the given features.

    ``Y1`` is the one-hot label matrix of the full training set and ``idx``
    selects the node's rows. Candidate thresholds are midpoints between
    consecutive distinct values; each side must keep ``min_leaf`` rows.
    Maximal decreases that tie are resolved toward the lower feature index,
    then the lower threshold. Returns None when no split strictly lowers the
    weighted impurity.
    """
    n = idx.shape[0]
    if n < 2 * min_leaf:
        return None
    Yn = Y1[idx]
    total = Yn.sum(axis=0)
    tol = 1e-12 * n
    lo, hi = min_leaf, n - min_leaf  # split after position i-1, i in [lo, hi]
    nl = np.arange(lo, hi + 1, dtype=np.float64)
    nr = n - nl
    best = None  # (score, feature, position, sorted values, left counts)
    for f in sorted(features):
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        distinct = sv[lo : hi + 1] > sv[lo - 1 : hi]
        if not distinct.any():
            continue
        left = np.cumsum(Yn[order], axis=0)[lo - 1 : hi]
        right = total - left
        score = (left * left).sum(axis=1) / nl + (right * right).sum(axis=1) / nr
        score = np.where(distinct, score, -np.inf)
        top = score.max()
        pos = int(np.flatnonzero(score >= top - tol)[0])
        if best is None or score[pos] > best[0] + tol:
            best = (float(score[pos]), f, pos, sv, left[pos])
    if best is None:
        return None
    score, f, pos, sv, left = best
    i = lo + pos
    a, b = float(sv[i - 1]), float(sv[i])
    thr = (a + b) / 2.0
    if not a < thr <= b:
        thr = b
    # exact integer test that the weighted impurity strictly drops
    left_i = [int(round(c)) for c in left]
    right_i = [int(round(t)) - c for t, c in zip(total, left_i)]
    n_l, n_r = i, n - i
    s_tot = sum(int(round(t)) ** 2 for t in total)
    s_l = sum(c * c for c in left_i)
    s_r = sum(c * c for c in right_i)
    if n * (n_r * s_l + n_l * s_r) <= n_l * n_r * s_tot:
        return None
    decrease = max(0.0, (score - s_tot / n) / n)
    return f, thr, decrease


def _grow(X, Y1, idx, depth, config: TreeConfig, m: int, rng, importance: np.ndarray, n_root: int) -> TreeNode:
    counts = Y1[idx].sum(axis=0)
    leaf = Leaf(tuple(int(round(c)) for c in counts))
    if depth >= config.max_depth or idx.shape[0] < 2 * config.min_leaf or np.count_nonzero(counts) <= 1:
        return leaf
    d = X.shape[1]
    features = rng.choice(d, size=m, replace=False) if m < d else np.arange(d)
    found = best_split(X, Y1, idx, [int(f) for f in features], config.min_leaf)
    if found is None:
        return leaf
    f, thr, decrease = found
    go_left = X[idx, f] < thr
    importance[f] += idx.shape[0] / n_root * decrease
    left = _grow(X, Y1, idx[go_left], depth + 1, config, m, rng, importance, n_root)
    right = _grow(X, Y1, idx[~go_left], depth + 1, config, m, rng, importance, n_root)
    return Split(f, thr, decrease, int(idx.shape[0]), left, right)


def _label_matrix(y: np.ndarray, classes: Sequence[int]) -> np.ndarray:
    y = np.asarray(y)
    cls = np.asarray(classes)
    pos = np.searchsorted(cls, y)
    if np.any(pos >= len(cls)) or np.any(cls[np.minimum(pos, len(cls) - 1)] != y):
        raise DataError("labels outside the class list")
    Y1 = np.zeros((y.shape[0], len(cls)))
    Y1[np.arange(y.shape[0]), pos] = 1.0
    return Y1


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    config: TreeConfig = TreeConfig(),
    rng: np.random.Generator | None = None,
    classes: Sequence[int] | None = None,
    rows: np.ndarray | None = None,
) -> tuple[TreeNode, np.ndarray]:
    """Grow one CART tree; returns (root, per-feature weighted impurity decrease).

    ``rows`` optionally selects (possibly repeated) training rows, as a
    bootstrap sample does. ``rng`` drives the per-node feature sampling.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("X must be two-dimensional")
    idx = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if idx.shape[0] == 0:
        raise EmptyDatasetError("empty training slice")
    if classes is None:
        classes = tuple(int(c) for c in np.unique(np.asarray(y)[idx]))
    m = config.resolve_features(X.shape[1])
    rng = rng if rng is not None else np.random.default_rng(0)
    Y1 = _label_matrix(y, classes)
    importance = np.zeros(X.shape[1])
    root = _grow(X, Y1, idx, 0, config, m, rng, importance, idx.shape[0])
    return root, importance


# ---------------------------------------------------------------- flat trees


@dataclass(frozen=True)
class FlatTree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    proba: np.ndarray  # (n_nodes, n_classes) leaf class frequencies
    depth: int

    @classmethod
    def from_node(cls, root: TreeNode, n_classes: int) -> "FlatTree":
        feature, threshold, left, right, proba = [], [], [], [], []
        max_depth = 0
        stack = [(root, -1, False, 0)]
        while stack:
            node, parent, is_right, depth = stack.pop()
            i = len(feature)
            max_depth = max(max_depth, depth)
            if parent >= 0:
                (right if is_right else left)[parent] = i
            left.append(-1)
            right.append(-1)
            if isinstance(node, Leaf):
                c = np.asarray(node.counts, dtype=np.float64)
                feature.append(-1)
                threshold.append(0.0)
                proba.append(c / c.sum())
            else:
                feature.append(node.feature)
                threshold.append(node.threshold)
                proba.append(np.zeros(n_classes))
                stack.append((node.right, i, True, depth + 1))
                stack.append((node.left, i, False, depth + 1))
        return cls(
            np.array(feature, dtype=np.int64),
            np.array(threshold),
            np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64),
            np.array(proba).reshape(len(feature), n_classes),
            max_depth,
        )

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            r = rows[internal]
            n = node[internal]
            go_left = X[r, f[internal]] < self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.proba[self.apply(X)]


def count_splits(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + count_splits(node.left) + count_splits(node.right)


# ---------------------------------------------------------------- forests


@dataclass
class ForestModel:
    classes: tuple[int, ...]
    trees: list[TreeNode]
    importance_sums: np.ndarray
    n_features: int
    config: ForestConfig = field(default_factory=ForestConfig)
    feature_names: tuple[str, ...] | None = None
    _flat: list[FlatTree] | None = field(default=None, repr=False, compare=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def flat_trees(self) -> list[FlatTree]:
        if self._flat is None:
            self._flat = [FlatTree.from_node(t, len(self.classes)) for t in self.trees]
        return self._flat

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[-1]}")
        total = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.flat_trees():
            total += tree.predict_proba(X)
        return total / self.n_trees

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array(self.classes)[np.argmax(self.predict_proba(X), axis=1)]

    @property
    def has_splits(self) -> bool:
        return any(isinstance(t, Split) for t in self.trees)

    def importances(self) -> np.ndarray:
        """Mean-decrease-in-impurity importances normalized to sum to one.

        All zeros when no tree contains a split.
        """
        total = self.importance_sums.sum()
        if total <= 0:
            return np.zeros_like(self.importance_sums)
        return self.importance_sums / total


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def _fit_tree(X, y, classes, config: ForestConfig, tree_index: int):
    rng = tree_rng(config.seed, tree_index)
    n = X.shape[0]
    rows = rng.integers(0, n, size=n) if config.bootstrap else None
    return train_tree(X, y, config.tree_config(), rng, classes, rows)


_SHARED: dict = {}


def _init_worker(X, y, classes, config):
    _SHARED.update(X=X, y=y, classes=classes, config=config)


def _fit_shared(tree_index: int):
    s = _SHARED
    return _fit_tree(s["X"], s["y"], s["classes"], s["config"], tree_index)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig = ForestConfig(),
    workers: int = 1,
    feature_names: Sequence[str] | None = None,
) -> ForestModel:
    """Bagged CART forest.

    Tree ``i`` draws its bootstrap sample and feature subsets from its own
    generator seeded by ``(config.seed, i)``, so the model does not depend on
    how many worker processes train it.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyDatasetError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise DataError("training matrix and labels are misaligned")
    classes = tuple(int(c) for c in np.unique(y))
    config.tree_config().resolve_features(X.shape[1])
    if workers > 1 and config.n_trees > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(X, y, classes, config)
        ) as pool:
            results = list(pool.map(_fit_shared, range(config.n_trees)))
    else:
        results = [_fit_tree(X, y, classes, config, i) for i in range(config.n_trees)]
    importance = np.zeros(X.shape[1])
    for _, imp in results:
        importance += imp
    names = tuple(feature_names) if feature_names is not None else None
    return ForestModel(classes, [t for t, _ in results], importance, X.shape[1], config, names)


@dataclass(frozen=True)
class FeatureImportance:
    ranking: list[tuple[str, float]]
    no_splits: bool

    def __iter__(self):
        return iter(self.ranking)


def feature_importance(model: ForestModel) -> FeatureImportance:
    """Features ranked by importance, descending; ties keep feature order."""
    values = model.importances()
    names = model.feature_names or tuple(f"f{i}" for i in range(model.n_features))
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return FeatureImportance([(names[i], float(values[i])) for i in order], not model.has_splits)

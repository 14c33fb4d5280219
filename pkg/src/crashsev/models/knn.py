"""Exact k-nearest-neighbour classifier on encoded features."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, UsageError


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    block_rows: int = 64

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("k must be >= 1")


class KnnModel:
    """Stores the training matrix; neighbours are found by exhaustive search.

    Distances are Euclidean. Equal distances are broken by the lower
    training-row index and tied votes by the smaller class label.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, k: int = 5, block_rows: int = 64):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DataError("training matrix and labels are misaligned")
        if not np.all(np.isfinite(X)):
            raise DataError("training matrix contains non-finite entries")
        if k < 1 or k > X.shape[0]:
            raise UsageError(f"k={k} must lie in [1, {X.shape[0]}]")
        self.X = X
        self.y = y
        self.k = int(k)
        self.block_rows = int(block_rows)
        self.classes = tuple(int(c) for c in np.unique(y))
        self._label_idx = np.searchsorted(np.array(self.classes), y)
        self._sq_norms = np.einsum("ij,ij->i", X, X)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def neighbors(self, Q: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows for each query, nearest first."""
        Q = self._check(Q)
        out = np.empty((Q.shape[0], self.k), dtype=np.int64)
        for start in range(0, Q.shape[0], self.block_rows):
            stop = min(start + self.block_rows, Q.shape[0])
            out[start:stop] = self._block_neighbors(Q[start:stop])
        return out

    def _check(self, Q) -> np.ndarray:
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {Q.shape[-1]}")
        return Q

    def _block_neighbors(self, Q: np.ndarray) -> np.ndarray:
        # Screen with the expanded form |q|^2 - 2 q.x + |x|^2, whose rounding
        # error is bounded by tol; anything within 2*tol of the k-th screened
        # distance is then re-measured exactly as sum((q - x)^2).
        k = self.k
        q_norms = np.einsum("ij,ij->i", Q, Q)
        approx = q_norms[:, None] - 2.0 * (Q @ self.X.T) + self._sq_norms[None, :]
        scale = q_norms[:, None] + self._sq_norms.max(initial=0.0)
        tol = 1e-10 * (scale + 1.0) * (self.n_features + 1)
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        result = np.empty((Q.shape[0], k), dtype=np.int64)
        for r in range(Q.shape[0]):
            cand = np.flatnonzero(approx[r] <= kth[r] + 2.0 * tol[r])
            diff = self.X[cand] - Q[r]
            exact = np.einsum("ij,ij->i", diff, diff)
            order = np.lexsort((cand, exact))[:k]
            result[r] = cand[order]
        return result

    def predict_proba(self, Q: np.ndarray, workers: int = 1) -> np.ndarray:
        """Neighbour class frequencies aligned to ``self.classes``."""
        Q = self._check(Q)
        if workers > 1 and Q.shape[0] > self.block_rows:
            blocks = [Q[s : s + self.block_rows] for s in range(0, Q.shape[0], self.block_rows)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                nbrs = np.vstack(list(pool.map(self._block_neighbors, blocks)))
        else:
            nbrs = self.neighbors(Q)
        labels = self._label_idx[nbrs]
        counts = np.zeros((Q.shape[0], len(self.classes)))
        for j in range(len(self.classes)):
            counts[:, j] = (labels == j).sum(axis=1)
        return counts / self.k

    def predict(self, Q: np.ndarray) -> np.ndarray:
        proba = self.predict_proba(Q)
        # argmax returns the first maximum, i.e. the smallest class label
        return np.array(self.classes)[np.argmax(proba, axis=1)]


def train_knn(X: np.ndarray, y: np.ndarray, config: KnnConfig = KnnConfig()) -> KnnModel:
    return KnnModel(X, y, config.k, config.block_rows)


def knn_predict(model: KnnModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (labels, probabilities) for each query row."""
    proba = model.predict_proba(Q)
    return np.array(model.classes)[np.argmax(proba, axis=1)], proba

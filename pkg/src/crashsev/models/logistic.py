"""One-vs-rest logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, DegenerateLabelsError, UsageError


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 42

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise UsageError("learning_rate must be > 0")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.l2 < 0:
            raise UsageError("l2 must be >= 0")


@dataclass
class LogisticModel:
    classes: tuple[int, ...]
    weights: np.ndarray  # (n_classes, n_features)
    biases: np.ndarray  # (n_classes,)
    config: LogisticConfig = field(default_factory=LogisticConfig)
    loss_history: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return logistic_predict(self, X)


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(_log_sigmoid(z))


def binary_loss(w: np.ndarray, b: np.ndarray, X: np.ndarray, T: np.ndarray, l2: float) -> np.ndarray:
    """Per-class penalized mean cross-entropy.

    ``w`` is (d, k), ``b`` is (k,), ``T`` holds 0/1 targets of shape (n, k).
    The bias is not penalized.
    """
    Z = X @ w + b
    # -[t log s(z) + (1-t) log s(-z)] = logaddexp(0, z) - t z
    ce = np.logaddexp(0.0, Z) - T * Z
    return ce.mean(axis=0) + 0.5 * l2 * np.sum(w * w, axis=0)


def binary_grad(w: np.ndarray, b: np.ndarray, X: np.ndarray, T: np.ndarray, l2: float):
    """Gradient of :func:`binary_loss` with respect to (w, b)."""
    n = X.shape[0]
    R = _sigmoid(X @ w + b) - T
    return X.T @ R / n + l2 * w, R.mean(axis=0)


def train_logistic(X: np.ndarray, y: np.ndarray, config: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Fit one binary classifier per class from zero-initialized weights.

    Every class keeps its own step size. A step that would raise that class's
    loss is rejected and its step size halved, so each loss history is
    non-increasing.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise DegenerateLabelsError()
    n, d = X.shape
    k = len(classes)
    T = (y[:, None] == np.array(classes)[None, :]).astype(np.float64)
    w = np.zeros((d, k))
    b = np.zeros(k)
    lr = np.full(k, config.learning_rate)
    loss = binary_loss(w, b, X, T, config.l2)
    history = [loss.copy()]
    for _ in range(config.epochs):
        gw, gb = binary_grad(w, b, X, T, config.l2)
        w_new = w - lr * gw
        b_new = b - lr * gb
        loss_new = binary_loss(w_new, b_new, X, T, config.l2)
        accept = loss_new <= loss
        w = np.where(accept, w_new, w)
        b = np.where(accept, b_new, b)
        loss = np.where(accept, loss_new, loss)
        lr = np.where(accept, lr, lr * 0.5)
        history.append(loss.copy())
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise DataError("logistic training diverged")
    hist = np.array(history).T.tolist()
    return LogisticModel(classes, np.ascontiguousarray(w.T), b, config, hist)


def logistic_predict(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """Per-class sigmoid scores rescaled to sum to one, shape (n, n_classes)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"expected {model.n_features} features, got {X.shape[-1]}")
    log_s = _log_sigmoid(X @ model.weights.T + model.biases)
    log_s -= log_s.max(axis=1, keepdims=True)
    p = np.exp(log_s)
    return p / p.sum(axis=1, keepdims=True)

"""Severity classifiers: one-vs-rest logistic regression, exact kNN, random forest."""

from .forest import (
    FeatureImportance,
    ForestConfig,
    ForestModel,
    Leaf,
    Split,
    TreeConfig,
    best_split,
    feature_importance,
    train_forest,
    train_tree,
)
from .io import load_model, model_from_dict, model_to_dict, save_model
from .knn import KnnConfig, KnnModel, knn_predict, train_knn
from .logistic import LogisticConfig, LogisticModel, logistic_predict, train_logistic

MODEL_KINDS = ("logistic", "knn", "forest")


def predict_proba(model, X, workers: int = 1):
    """Class probabilities aligned to ``model.classes`` for any model kind."""
    if isinstance(model, KnnModel):
        return model.predict_proba(X, workers=workers)
    return model.predict_proba(X)


def fit(kind: str, X, y, config: dict | None = None, seed: int | None = None,
        workers: int = 1, feature_names=None):
    """Train a model of the named kind from a plain-dict config."""
    config = dict(config or {})
    if kind == "logistic":
        if seed is not None:
            config["seed"] = seed
        return train_logistic(X, y, LogisticConfig(**config))
    if kind == "knn":
        return train_knn(X, y, KnnConfig(**config))
    if kind == "forest":
        if seed is not None:
            config["seed"] = seed
        return train_forest(X, y, ForestConfig(**config), workers=workers, feature_names=feature_names)
    raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")


__all__ = [
    "MODEL_KINDS",
    "FeatureImportance",
    "ForestConfig",
    "ForestModel",
    "KnnConfig",
    "KnnModel",
    "Leaf",
    "LogisticConfig",
    "LogisticModel",
    "Split",
    "TreeConfig",
    "best_split",
    "feature_importance",
    "fit",
    "knn_predict",
    "load_model",
    "logistic_predict",
    "model_from_dict",
    "model_to_dict",
    "predict_proba",
    "save_model",
    "train_forest",
    "train_knn",
    "train_logistic",
    "train_tree",
]

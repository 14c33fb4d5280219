"""Versioned JSON documents for trained models."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..features import FeatureMatrix
from .forest import ForestConfig, ForestModel, Leaf, Split, TreeNode
from .knn import KnnModel
from .logistic import LogisticConfig, LogisticModel

FORMAT = "crashsev-model"
VERSION = 1


def node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"counts": list(node.counts)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "decrease": node.decrease,
        "n": node.n_samples,
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(data: dict) -> TreeNode:
    if "counts" in data:
        return Leaf(tuple(int(c) for c in data["counts"]))
    return Split(
        int(data["feature"]),
        float(data["threshold"]),
        float(data["decrease"]),
        int(data["n"]),
        node_from_dict(data["left"]),
        node_from_dict(data["right"]),
    )


def _matrix_digest(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<i8").tobytes())
    return h.hexdigest()


def model_to_dict(model, matrix_ref: str | None = None, binarized: bool = False) -> dict:
    """Serialize a model. kNN models need ``matrix_ref``, the matrix directory
    holding their training data (stored as given, typically relative)."""
    doc: dict = {"format": FORMAT, "version": VERSION}
    if isinstance(model, LogisticModel):
        doc.update(
            kind="logistic",
            classes=list(model.classes),
            weights=model.weights.tolist(),
            biases=model.biases.tolist(),
            config=asdict(model.config),
        )
    elif isinstance(model, KnnModel):
        if matrix_ref is None:
            raise ValueError("kNN models are saved by reference to their training matrix")
        doc.update(
            kind="knn",
            classes=list(model.classes),
            k=model.k,
            matrix=matrix_ref,
            prefix="train",
            binarized=binarized,
            n_features=model.n_features,
            train_digest=_matrix_digest(model.X, model.y),
        )
    elif isinstance(model, ForestModel):
        doc.update(
            kind="forest",
            classes=list(model.classes),
            n_features=model.n_features,
            feature_names=list(model.feature_names) if model.feature_names else None,
            config=asdict(model.config),
            importance_sums=model.importance_sums.tolist(),
            trees=[node_to_dict(t) for t in model.trees],
        )
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict, base_dir: str | Path = "."):
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise DataError("not a crashsev model document (or unsupported version)")
    kind = doc.get("kind")
    if kind == "logistic":
        return LogisticModel(
            tuple(doc["classes"]),
            np.array(doc["weights"], dtype=np.float64).reshape(len(doc["classes"]), -1),
            np.array(doc["biases"], dtype=np.float64),
            LogisticConfig(**doc["config"]),
        )
    if kind == "knn":
        matrix_dir = Path(base_dir) / doc["matrix"]
        fm = FeatureMatrix.load(matrix_dir, doc.get("prefix", "train"))
        if doc.get("binarized"):
            fm = fm.binarized()
        if _matrix_digest(fm.X, fm.y) != doc["train_digest"]:
            raise DataError(f"kNN training matrix in {matrix_dir} changed since the model was saved")
        return KnnModel(fm.X, fm.y, int(doc["k"]))
    if kind == "forest":
        names = doc.get("feature_names")
        return ForestModel(
            tuple(doc["classes"]),
            [node_from_dict(t) for t in doc["trees"]],
            np.array(doc["importance_sums"], dtype=np.float64),
            int(doc["n_features"]),
            ForestConfig(**doc["config"]),
            tuple(names) if names else None,
        )
    raise DataError(f"unknown model kind {kind!r}")


def dumps_model(model, matrix_ref: str | None = None, binarized: bool = False) -> str:
    return json.dumps(model_to_dict(model, matrix_ref, binarized), separators=(",", ":")) + "\n"


def save_model(
    model, path: str | Path, matrix_dir: str | Path | None = None, binarized: bool = False
) -> None:
    """Write a model file; a kNN matrix directory is recorded relative to it."""
    path = Path(path)
    ref = None
    if matrix_dir is not None:
        ref = os.path.relpath(Path(matrix_dir).resolve(), path.resolve().parent)
    path.write_text(dumps_model(model, ref, binarized), encoding="utf-8")


def load_model(path: str | Path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataError(f"{path}: not valid JSON") from exc
    return model_from_dict(doc, path.parent)

"""Local deterministic stand-in for cloud fine-tuning: hashed bag-of-tokens
features and a full-batch logistic-regression classifier.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._core import (
    featurize_counts,
    featurize_csr,
    logreg_scores,
    logreg_scores_csr,
    logreg_train,
    logreg_train_csr,
)

__all__ = [
    "ProxyError",
    "TrainingMeta",
    "LinearModel",
    "DEFAULT_DIM",
    "DEFAULT_EPOCHS",
    "DEFAULT_LEARNING_RATE",
    "DEFAULT_L2",
    "featurize",
    "featurize_matrix",
    "train",
    "fit_texts",
    "score_texts",
    "predict",
    "predict_scores",
    "save_model",
    "load_model",
]

DEFAULT_DIM = 4096
DEFAULT_EPOCHS = 200
DEFAULT_LEARNING_RATE = 0.5
DEFAULT_L2 = 1e-4

_TOKEN_RE = re.compile(r"[a-z0-9]+")

_FORMAT_VERSION = 1


class ProxyError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class TrainingMeta:
    seed: int
    epochs: int
    learning_rate: float
    l2: float
    loss_trace: list[float] = field(default_factory=list)


@dataclass
class LinearModel:
    weights: np.ndarray  # length D + 1, bias last
    dim: int
    meta: TrainingMeta

    @property
    def bias(self) -> float:
        return float(self.weights[-1])


def _tokens(text: str) -> list[bytes]:
    return [t.encode("utf-8") for t in _TOKEN_RE.findall(text.lower())]


def featurize(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Hashed token counts normalized by token count; empty text gives zeros."""
    if dim < 2:
        raise ProxyError("BAD_DIM", f"dimension must be >= 2, got {dim}")
    tokens = _tokens(text)
    vec = featurize_counts(tokens, dim)
    if tokens:
        vec = vec / len(tokens)
    return vec


def featurize_matrix(texts: list[str], dim: int = DEFAULT_DIM) -> np.ndarray:
    X = np.zeros((len(texts), dim), dtype=np.float64)
    for i, text in enumerate(texts):
        X[i] = featurize(text, dim)
    return X


def train(
    examples: list[tuple[np.ndarray, bool]],
    seed: int = 0,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    l2: float = DEFAULT_L2,
) -> LinearModel:
    """Full-batch gradient descent from zero weights; bit-reproducible."""
    if not examples:
        raise ProxyError("SINGLE_CLASS", "no training examples")
    labels = {bool(y) for _, y in examples}
    if len(labels) < 2:
        raise ProxyError("SINGLE_CLASS", "training set must contain both classes")
    dims = {len(x) for x, _ in examples}
    if len(dims) != 1:
        raise ProxyError("DIM_MISMATCH", f"inconsistent feature dimensions {sorted(dims)}")
    dim = dims.pop()
    X = np.ascontiguousarray(np.stack([x for x, _ in examples]), dtype=np.float64)
    y = np.array([1.0 if lab else 0.0 for _, lab in examples], dtype=np.float64)
    w = np.zeros(dim + 1, dtype=np.float64)
    trace = logreg_train(X, y, w, epochs, learning_rate, l2)
    meta = TrainingMeta(
        seed=seed,
        epochs=epochs,
        learning_rate=learning_rate,
        l2=l2,
        loss_trace=[float(v) for v in trace],
    )
    return LinearModel(weights=w, dim=dim, meta=meta)


def fit_texts(
    texts: list[str],
    labels: list[bool],
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    l2: float = DEFAULT_L2,
) -> LinearModel:
    """Featurize and train in one step over sparse rows.

    Same loss and update rule as train(); the sparse path only skips the
    zero feature entries, so it is the one to use at corpus scale.
    """
    if dim < 2:
        raise ProxyError("BAD_DIM", f"dimension must be >= 2, got {dim}")
    if len(texts) != len(labels):
        raise ProxyError("DIM_MISMATCH", "texts and labels differ in length")
    if len({bool(y) for y in labels}) < 2:
        raise ProxyError("SINGLE_CLASS", "training set must contain both classes")
    indptr, indices, data = featurize_csr([_tokens(t) for t in texts], dim)
    y = np.array([1.0 if lab else 0.0 for lab in labels], dtype=np.float64)
    w = np.zeros(dim + 1, dtype=np.float64)
    trace = logreg_train_csr(indptr, indices, data, y, w, epochs, learning_rate, l2)
    meta = TrainingMeta(
        seed=seed,
        epochs=epochs,
        learning_rate=learning_rate,
        l2=l2,
        loss_trace=[float(v) for v in trace],
    )
    return LinearModel(weights=w, dim=dim, meta=meta)


def score_texts(model: LinearModel, texts: list[str]) -> np.ndarray:
    indptr, indices, data = featurize_csr([_tokens(t) for t in texts], model.dim)
    return logreg_scores_csr(indptr, indices, data, model.weights)


def predict(model: LinearModel, vec: np.ndarray) -> tuple[bool, float]:
    """Label and logistic score for one feature vector."""
    if len(vec) != model.dim:
        raise ProxyError(
            "DIM_MISMATCH", f"vector has dimension {len(vec)}, model expects {model.dim}"
        )
    score = float(
        logreg_scores(np.ascontiguousarray(vec, dtype=np.float64).reshape(1, -1), model.weights)[0]
    )
    return score >= 0.5, score


def predict_scores(model: LinearModel, X: np.ndarray) -> np.ndarray:
    if X.shape[1] != model.dim:
        raise ProxyError(
            "DIM_MISMATCH", f"matrix has dimension {X.shape[1]}, model expects {model.dim}"
        )
    return logreg_scores(np.ascontiguousarray(X, dtype=np.float64), model.weights)


def save_model(model: LinearModel, path: str | Path) -> None:
    payload = {
        "format_version": _FORMAT_VERSION,
        "dim": model.dim,
        "seed": model.meta.seed,
        "epochs": model.meta.epochs,
        "learning_rate": model.meta.learning_rate,
        "l2": model.meta.l2,
        "loss_trace": model.meta.loss_trace,
        "weights": [float(v) for v in model.weights],
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != _FORMAT_VERSION:
        raise ProxyError("BAD_FORMAT", f"unsupported model file version in {path}")
    weights = np.array(payload["weights"], dtype=np.float64)
    if len(weights) != payload["dim"] + 1:
        raise ProxyError("BAD_FORMAT", "weight count does not match dimension")
    meta = TrainingMeta(
        seed=payload["seed"],
        epochs=payload["epochs"],
        learning_rate=payload["learning_rate"],
        l2=payload["l2"],
        loss_trace=list(payload["loss_trace"]),
    )
    return LinearModel(weights=weights, dim=payload["dim"], meta=meta)

"""One-vs-rest linear SVM trained by dual coordinate descent.

Solves, per class, min_w 1/2 ||w||^2 + C sum_i max(0, 1 - y_i w.x_i) with an
augmented constant feature carrying the bias.  Coordinate order is a seeded
permutation redrawn each epoch; the stream is derived per class from the
model seed, so per-class subproblems are independent and the result does
not depend on whether classes are trained sequentially or concurrently.
Stopping: relative duality gap <= tol.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError, ParameterError
from .features import FORMAT_VERSION, _Reader, _read_magic

SCM_MAGIC = b"SCM1"


@dataclass
class LinearModel:
    weights: np.ndarray   # (n_classes, dim)
    biases: np.ndarray    # (n_classes,)
    classes: np.ndarray   # sorted distinct labels, u32
    C: float
    seed: int


@dataclass
class Evaluation:
    accuracy: float
    per_class_accuracy: np.ndarray
    mean_per_class_accuracy: float
    confusion: np.ndarray   # rows = true class, cols = predicted
    classes: np.ndarray


def _train_one(Xa, y, C, rng, tol, max_epochs):
    """Dual CD for one binary subproblem on the bias-augmented matrix."""
    n = Xa.shape[0]
    Qdiag = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    w = np.zeros(Xa.shape[1])
    for _ in range(max_epochs):
        for i in rng.permutation(n):
            G = y[i] * (w @ Xa[i]) - 1.0
            if alpha[i] == 0.0:
                PG = min(G, 0.0)
            elif alpha[i] == C:
                PG = max(G, 0.0)
            else:
                PG = G
            if PG != 0.0 and Qdiag[i] > 0.0:
                new = min(max(alpha[i] - G / Qdiag[i], 0.0), C)
                if new != alpha[i]:
                    w = w + (new - alpha[i]) * y[i] * Xa[i]
                    alpha[i] = new
        margins = 1.0 - y * (Xa @ w)
        primal = 0.5 * (w @ w) + C * np.maximum(margins, 0.0).sum()
        dual = alpha.sum() - 0.5 * (w @ w)
        if primal - dual <= max(1.0, abs(primal)) * tol:
            break
    return w


def train(features: np.ndarray, labels, C: float = 1.0, seed: int = 0,
          tol: float = 1e-4, max_epochs: int = 1000) -> LinearModel:
    X = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise ParameterError("features must be (n, d) with one label per row")
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite values")
    classes = np.unique(labels)
    if classes.shape[0] < 2:
        raise ParameterError("training needs at least two classes")
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    seeds = np.random.SeedSequence(seed).spawn(classes.shape[0])
    weights = np.zeros((classes.shape[0], X.shape[1]))
    biases = np.zeros(classes.shape[0])
    for ci, c in enumerate(classes):
        y = np.where(labels == c, 1.0, -1.0)
        w = _train_one(Xa, y, C, np.random.default_rng(seeds[ci]), tol,
                       max_epochs)
        weights[ci] = w[:-1]
        biases[ci] = w[-1]
    return LinearModel(weights=weights, biases=biases,
                       classes=classes.astype(np.uint32), C=C, seed=seed)


def decision_scores(model: LinearModel, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.weights.shape[1]:
        raise ParameterError(
            f"feature length {v.shape[-1]} != model dim {model.weights.shape[1]}")
    return v @ model.weights.T + model.biases


def predict(model: LinearModel, v: np.ndarray):
    """Argmax of class scores; ties go to the lowest class index."""
    scores = decision_scores(model, v)
    return model.classes[np.argmax(scores, axis=-1)]


def evaluate(model: LinearModel, features: np.ndarray, labels) -> Evaluation:
    labels = np.asarray(labels)
    preds = np.atleast_1d(predict(model, features))
    idx = np.searchsorted(model.classes, labels)
    if np.any(idx >= len(model.classes)) or \
            np.any(model.classes[np.minimum(idx, len(model.classes) - 1)] != labels):
        raise DataError("evaluation labels contain classes unknown to the model")
    pred_idx = np.searchsorted(model.classes, preds)
    k = len(model.classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (idx, pred_idx), 1)
    row_sums = confusion.sum(axis=1)
    per_class = np.divide(np.diag(confusion), row_sums,
                          out=np.zeros(k), where=row_sums > 0)
    present = row_sums > 0
    return Evaluation(
        accuracy=float(np.mean(preds == labels)),
        per_class_accuracy=per_class,
        mean_per_class_accuracy=float(per_class[present].mean()),
        confusion=confusion,
        classes=model.classes,
    )


# ---- model file ----

def write_model(path, model: LinearModel):
    k, dim = model.weights.shape
    with open(path, "wb") as f:
        f.write(SCM_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", k))
        f.write(np.ascontiguousarray(model.classes, dtype="<u4").tobytes())
        f.write(struct.pack("<dQQ", model.C, model.seed, dim))
        f.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.biases, dtype="<f8").tobytes())


def read_model(path) -> LinearModel:
    with open(path, "rb") as f:
        r = _Reader(f)
        _read_magic(r, SCM_MAGIC)
        (k,) = r.unpack("<Q", "class count")
        if k < 1:
            raise FormatError("model declares zero classes", offset=r.offset - 8)
        classes = np.frombuffer(r.read(4 * k, "classes"), dtype="<u4").copy()
        C, seed, dim = r.unpack("<dQQ", "hyperparameters")
        weights = np.frombuffer(r.read(8 * k * dim, "weights"),
                                dtype="<f8").reshape(k, dim).copy()
        biases = np.frombuffer(r.read(8 * k, "biases"), dtype="<f8").copy()
        trailing = f.read(1)
        if trailing:
            raise FormatError("trailing bytes after declared content",
                              offset=r.offset)
    return LinearModel(weights=weights, biases=biases, classes=classes,
                       C=float(C), seed=int(seed))

"""Linear SVM trained by seeded stochastic subgradient descent (Pegasos steps).

Objective::

    lambda/2 * ||w||^2 + 1/N * sum_i c_i * max(0, 1 - y_i * (w . x_i + b))

with c_i = class_weight_pos for positives and 1 otherwise.  The bias is
learned as the weight of an appended constant feature and is not
regularized.  Because the unregularized bias makes the 1/(lambda*t) steps
unstable, the bias is also set to its exact minimizer (for the current w) at
the end of every epoch.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimMismatch, EmptyTrainingSet, ModelFormatError, SingleClass


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-2
    epochs: int = 10
    seed: int = 0
    class_weight_pos: float | None = None  # None: #neg / #pos of the training set

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.class_weight_pos is not None and not self.class_weight_pos > 0:
            raise ValueError("class_weight_pos must be positive")


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_config_digest: str = ""
    lam: float = 0.0
    epochs: int = 0
    seed: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.weights.size


def _check_labels(y: np.ndarray) -> None:
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 or -1")
    if np.all(y == y[0]):
        raise SingleClass("training labels contain a single class")


def optimal_bias(scores: np.ndarray, y: np.ndarray, c: np.ndarray) -> float:
    """Exact minimizer over b of sum_i c_i * max(0, 1 - y_i * (scores_i + b))."""
    bp = y - scores  # hinge kinks
    order = np.argsort(bp, kind="stable")
    bp, yy, cc = bp[order], y[order], c[order]
    pos_w = np.where(yy > 0, cc, 0.0)
    neg_w = np.where(yy < 0, cc, 0.0)
    # slope just right of bp[k]: -(positive weight with kink > bp[k]) + (negative weight with kink <= bp[k])
    slope = -(pos_w.sum() - np.cumsum(pos_w)) + np.cumsum(neg_w)
    tol = 1e-12 * (pos_w.sum() + neg_w.sum())
    k = int(np.argmax(slope >= -tol))
    if abs(slope[k]) <= tol and k + 1 < bp.size:
        # flat stretch of the objective: take its midpoint
        return float(0.5 * (bp[k] + bp[k + 1]))
    return float(bp[k])


def train(features, labels, cfg: TrainConfig = TrainConfig(), digest: str = "") -> LinearModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if X.size == 0 or len(y) == 0:
        raise EmptyTrainingSet("no training samples")
    if X.ndim != 2:
        raise DimMismatch("features must be a 2-D array of uniform dimension")
    if X.shape[0] != y.size:
        raise DimMismatch(f"{X.shape[0]} feature rows but {y.size} labels")
    _check_labels(y)

    n, d = X.shape
    n_pos = int((y == 1).sum())
    cpos = cfg.class_weight_pos if cfg.class_weight_pos is not None else (n - n_pos) / n_pos
    cw = np.where(y == 1, cpos, 1.0)
    coef = cw * y

    lam = cfg.lam
    rng = np.random.default_rng(cfg.seed)
    # w is kept as scale * v so the per-step shrink costs O(1)
    v = np.zeros(d)
    scale = 1.0
    b = 0.0
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            xi = X[i]
            violated = y[i] * (scale * (xi @ v) + b) < 1.0
            shrink = 1.0 - eta * lam
            if shrink == 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if violated:
                v += (eta * coef[i] / scale) * xi
                b += eta * coef[i]
            if scale < 1e-9:
                v *= scale
                scale = 1.0
        w = scale * v
        b = optimal_bias(X @ w, y.astype(np.float64), cw)
    return LinearModel(w, b, digest, lam, cfg.epochs, cfg.seed)


def score(m: LinearModel, x) -> float | np.ndarray:
    """Decision value ``w . x + b``; ``x`` may be one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != m.dim:
        raise DimMismatch(f"feature dim {x.shape[-1]} != model dim {m.dim}")
    s = x @ m.weights + m.bias
    return float(s) if np.ndim(s) == 0 else s


def predict(m: LinearModel, x, threshold: float = 0.0):
    s = score(m, x)
    if isinstance(s, float):
        return 1 if s >= threshold else -1
    return np.where(s >= threshold, 1, -1)


def hinge_loss(m: LinearModel, X, y, class_weight_pos: float = 1.0) -> float:
    """Mean (class-weighted) hinge loss, without the regularizer."""
    y = np.asarray(y)
    margins = y * score(m, np.atleast_2d(X))
    c = np.where(y == 1, class_weight_pos, 1.0)
    return float(np.mean(c * np.maximum(0.0, 1.0 - margins)))


def objective(m: LinearModel, X, y, class_weight_pos: float = 1.0) -> float:
    return 0.5 * m.lam * float(m.weights @ m.weights) + hinge_loss(m, X, y, class_weight_pos)


# ---------------------------------------------------------------------------
# model file

MODEL_MAGIC = b"MELM"
MODEL_HEADER = struct.Struct("<4sI16sdIQ")


def save_model(m: LinearModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = m.feature_config_digest.encode("ascii").ljust(16, b"\0")[:16]
    with open(path, "wb") as fh:
        fh.write(MODEL_HEADER.pack(MODEL_MAGIC, m.dim, digest, m.lam, m.epochs, m.seed))
        fh.write(m.weights.astype("<f4").tobytes())
        fh.write(np.array([m.bias], dtype="<f4").tobytes())
    return path


def load_model(path) -> LinearModel:
    data = Path(path).read_bytes()
    if len(data) < MODEL_HEADER.size:
        raise ModelFormatError(f"{path}: truncated model header")
    magic, dim, digest, lam, epochs, seed = MODEL_HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    body = data[MODEL_HEADER.size :]
    if len(body) != 4 * (dim + 1):
        raise ModelFormatError(f"{path}: expected {dim} weights plus bias")
    vals = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return LinearModel(vals[:dim], float(vals[dim]), digest.rstrip(b"\0").decode("ascii"), lam, epochs, seed)

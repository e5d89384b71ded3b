"""L2-regularized logistic regression trained by plain gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch, EmptyDataset, InvalidConfig, SingleClassDataset
from .dataset import Dataset


@dataclass
class LogisticModel:
    classes_: tuple[int, ...]
    weights: np.ndarray = field(repr=False)  # (d+1,) binary, (n_classes, d+1) else
    feat_mean: np.ndarray = field(repr=False)
    feat_std: np.ndarray = field(repr=False)
    reg_strength: float = 1.0

    @property
    def n_features(self) -> int:
        return self.feat_mean.shape[0]

    @property
    def binary(self) -> bool:
        return len(self.classes_) == 2


def standardize(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Center and scale; zero-variance columns map to 0."""
    out = X - mean
    nz = std > 0
    out[:, nz] /= std[nz]
    out[:, ~nz] = 0.0
    return out


def loss_and_grad(w_ext: np.ndarray, X: np.ndarray, t01: np.ndarray, reg: float):
    """Mean logistic loss with L2 penalty reg/(2n)*||w||^2 (bias free).

    w_ext stacks the weight vector and a trailing bias; t01 holds 0/1
    targets.  Returns (loss, gradient) for finite-difference checks and
    the training loop alike.
    """
    n = X.shape[0]
    w, b = w_ext[:-1], w_ext[-1]
    z = X @ w + b
    loss = float(np.mean(np.where(t01 == 1.0,
                                  np.logaddexp(0.0, -z),
                                  np.logaddexp(0.0, z))))
    loss += reg / (2.0 * n) * float(np.dot(w, w))
    r = (expit(z) - t01) / n
    g = np.empty_like(w_ext)
    g[:-1] = X.T @ r + (reg / n) * w
    g[-1] = r.sum()
    return loss, g


def _descend(X: np.ndarray, t01: np.ndarray, reg: float, max_iters: int,
             tol: float, step: float) -> np.ndarray:
    n, d = X.shape
    w = np.zeros(d + 1)
    g = np.empty(d + 1)
    for _ in range(max_iters):
        z = X @ w[:-1] + w[-1]
        r = (expit(z) - t01) / n
        g[:-1] = X.T @ r + (reg / n) * w[:-1]
        g[-1] = r.sum()
        if np.linalg.norm(g) < tol:
            break
        w -= step * g
    return w


def fit_logistic(train: Dataset, reg_strength: float = 1.0,
                 max_iters: int = 1000, tol: float = 1e-6) -> LogisticModel:
    """Binary fit on {-1,+1} targets, one-vs-rest above two classes.

    Features are standardized first; the step size is 1/L for the
    smooth-part Lipschitz constant L, so descent never diverges.
    """
    if reg_strength < 0:
        raise InvalidConfig(f"reg_strength must be >= 0, got {reg_strength}")
    if max_iters < 1:
        raise InvalidConfig(f"max_iters must be >= 1, got {max_iters}")
    if tol <= 0:
        raise InvalidConfig(f"tol must be > 0, got {tol}")
    if train.n_samples == 0:
        raise EmptyDataset("cannot fit logistic regression on zero windows")
    classes = np.unique(train.y)
    if classes.size < 2:
        raise SingleClassDataset(
            f"logistic regression needs >= 2 classes, got {classes.tolist()}")

    n = train.n_samples
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    Xs = standardize(train.X.astype(np.float64, copy=True), mean, std)

    ext = np.hstack([Xs, np.ones((n, 1))])
    lam_max = float(np.linalg.eigvalsh(ext.T @ ext)[-1])
    lipschitz = lam_max / (4.0 * n) + reg_strength / n
    step = 1.0 / lipschitz

    if classes.size == 2:
        t01 = (train.y == classes[1]).astype(np.float64)
        weights = _descend(Xs, t01, reg_strength, max_iters, tol, step)
    else:
        weights = np.empty((classes.size, train.n_features + 1))
        for i, c in enumerate(classes):
            t01 = (train.y == c).astype(np.float64)
            weights[i] = _descend(Xs, t01, reg_strength, max_iters, tol, step)

    return LogisticModel(
        classes_=tuple(int(c) for c in classes),
        weights=weights,
        feat_mean=mean,
        feat_std=std,
        reg_strength=float(reg_strength),
    )


def predict_logistic(model: LogisticModel, X: np.ndarray):
    """Labels and per-class scores; one-vs-rest scores are normalized."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} feature columns, got {X.shape}")
    classes = np.asarray(model.classes_, dtype=np.int64)
    Xs = standardize(X.copy(), model.feat_mean, model.feat_std)
    if model.binary:
        p = expit(Xs @ model.weights[:-1] + model.weights[-1])
        proba = np.column_stack([1.0 - p, p])
    else:
        scores = expit(Xs @ model.weights[:, :-1].T + model.weights[:, -1])
        proba = scores / scores.sum(axis=1, keepdims=True)
    labels = classes[np.argmax(proba, axis=1)]
    return labels, proba

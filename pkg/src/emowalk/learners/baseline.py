"""Most-frequent-label baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset
from .dataset import Dataset


@dataclass(frozen=True)
class MostFrequentModel:
    classes_: tuple[int, ...]
    majority_label: int
    prior: tuple[float, ...]
    n_features: int


def fit_most_frequent(train: Dataset) -> MostFrequentModel:
    """Majority label of the training set; ties go to the smallest label."""
    if train.n_samples == 0:
        raise EmptyDataset("cannot fit a baseline on zero windows")
    classes, counts = np.unique(train.y, return_counts=True)
    majority = int(classes[np.argmax(counts)])
    prior = tuple((counts / train.n_samples).tolist())
    return MostFrequentModel(
        classes_=tuple(int(c) for c in classes),
        majority_label=majority,
        prior=prior,
        n_features=train.n_features,
    )


def predict_most_frequent(model: MostFrequentModel, X: np.ndarray):
    """Constant majority-label predictions with the training prior as scores."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} feature columns, got {X.shape}")
    n = X.shape[0]
    labels = np.full(n, model.majority_label, dtype=np.int64)
    proba = np.tile(np.asarray(model.prior, dtype=np.float64), (n, 1))
    return labels, proba

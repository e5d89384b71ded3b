"""Feature-matrix dataset shared by all learners."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import LengthMismatch

VALID_LABELS = (-1, 0, 1)


@dataclass
class Dataset:
    """Windows-by-features matrix X with per-window emotion labels y."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D (windows x features)")
        if self.y.ndim != 1:
            raise ValueError("y must be 1-D")
        if self.X.shape[0] != self.y.shape[0]:
            raise LengthMismatch(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} labels")
        if self.y.size and not np.isin(self.y, VALID_LABELS).all():
            bad = sorted(set(self.y.tolist()) - set(VALID_LABELS))
            raise ValueError(f"labels must come from {VALID_LABELS}, got {bad}")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def classes(self) -> np.ndarray:
        return np.unique(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx])

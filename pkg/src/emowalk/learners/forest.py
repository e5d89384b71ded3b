"""Random forest of CART trees grown from scratch."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset, EmptyInput, InvalidConfig
from ..seeding import spawn_tree_seeds
from ._tree import forest_votes, grow_forest
from .dataset import Dataset

MAX_FEATURES_NAMES = ("sqrt", "log2")


def gini_impurity(labels) -> float:
    """Gini impurity 1 - sum(p_c^2) of a label multiset."""
    arr = np.asarray(labels)
    if arr.size == 0:
        raise EmptyInput("gini impurity of an empty label set is undefined")
    _, counts = np.unique(arr, return_counts=True)
    p = counts / arr.size
    return float(1.0 - np.dot(p, p))


@dataclass(frozen=True)
class HyperParams:
    """Forest hyperparameters; defaults are the untuned comparator."""

    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: str | float = "sqrt"
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfig(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidConfig(f"max_depth must be None or >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise InvalidConfig(
                f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.min_samples_leaf < 1:
            raise InvalidConfig(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if isinstance(self.max_features, str):
            if self.max_features not in MAX_FEATURES_NAMES:
                raise InvalidConfig(f"unknown max_features {self.max_features!r}")
        elif isinstance(self.max_features, (int, float)) and not isinstance(self.max_features, bool):
            if not 0.0 < float(self.max_features) <= 1.0:
                raise InvalidConfig(
                    f"max_features fraction must be in (0, 1], got {self.max_features}")
        else:
            raise InvalidConfig(f"bad max_features {self.max_features!r}")
        if not isinstance(self.bootstrap, bool):
            raise InvalidConfig("bootstrap must be a bool")


DEFAULT_FOREST = HyperParams()


def resolve_max_features(max_features: str | float, n_features: int) -> int:
    """Features drawn per split: sqrt/log2 floor, fractions round, min 1."""
    if n_features < 1:
        raise InvalidConfig("n_features must be >= 1")
    if max_features == "sqrt":
        k = int(math.isqrt(n_features))
    elif max_features == "log2":
        k = int(math.log2(n_features))
    else:
        k = round(float(max_features) * n_features)
    return min(n_features, max(1, k))


@dataclass
class ForestModel:
    classes_: tuple[int, ...]
    params: HyperParams
    seed: int
    n_features: int
    feature: np.ndarray = field(repr=False)
    threshold: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    leaf: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1


def fit_random_forest(train: Dataset, params: HyperParams = DEFAULT_FOREST,
                      seed: int = 0) -> ForestModel:
    """Grow params.n_trees CART trees; tree t is a function of (seed, t) only."""
    if train.n_samples == 0:
        raise EmptyDataset("cannot fit a forest on zero windows")
    classes = np.unique(train.y)
    codes = np.searchsorted(classes, train.y).astype(np.int32)
    XT = np.ascontiguousarray(train.X.T, dtype=np.float64)
    mtry = resolve_max_features(params.max_features, train.n_features)
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    tree_seeds = spawn_tree_seeds(int(seed), params.n_trees)
    feature, threshold, left, right, leaf, offsets = grow_forest(
        XT, codes, int(classes.size), int(params.n_trees), max_depth,
        int(params.min_samples_split), int(params.min_samples_leaf),
        int(mtry), params.bootstrap, tree_seeds)
    return ForestModel(
        classes_=tuple(int(c) for c in classes),
        params=params,
        seed=int(seed),
        n_features=train.n_features,
        feature=feature, threshold=threshold,
        left=left, right=right, leaf=leaf, offsets=offsets,
    )


def predict_random_forest(model: ForestModel, X: np.ndarray):
    """Majority vote over trees; scores are vote fractions per class."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} feature columns, got {X.shape}")
    classes = np.asarray(model.classes_, dtype=np.int64)
    if X.shape[0] == 0:
        return (np.empty(0, dtype=np.int64),
                np.empty((0, classes.size), dtype=np.float64))
    votes = forest_votes(model.feature, model.threshold, model.left,
                         model.right, model.leaf, model.offsets, X,
                         int(classes.size))
    proba = votes / model.n_trees
    labels = classes[np.argmax(votes, axis=1)]
    return labels, proba

"""Randomized hyperparameter search with stratified k-fold CV."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySpace, InvalidConfig, TooFewPerClass
from .learners.dataset import Dataset
from .learners.forest import HyperParams, fit_random_forest, predict_random_forest
from .seeding import derive_seed, rng_from


@dataclass(frozen=True)
class SearchSpace:
    """Ranges (lo, hi inclusive) for integer fields, choice sets otherwise."""

    n_trees: tuple[int, int] = (50, 500)
    max_depth: tuple = (None,) + tuple(range(5, 31))
    min_samples_split: tuple[int, int] = (2, 20)
    min_samples_leaf: tuple[int, int] = (1, 10)
    max_features: tuple = ("sqrt", "log2", 0.3, 0.5, 0.7, 1.0)
    bootstrap: tuple[bool, ...] = (True, False)

    def __post_init__(self):
        for name in ("n_trees", "min_samples_split", "min_samples_leaf"):
            rng = getattr(self, name)
            if len(rng) != 2 or rng[0] > rng[1]:
                raise EmptySpace(f"{name} range {rng} is empty")
        if self.n_trees[0] < 1:
            raise InvalidConfig(f"n_trees must start at >= 1, got {self.n_trees}")
        if self.min_samples_split[0] < 2:
            raise InvalidConfig(
                f"min_samples_split must start at >= 2, got {self.min_samples_split}")
        if self.min_samples_leaf[0] < 1:
            raise InvalidConfig(
                f"min_samples_leaf must start at >= 1, got {self.min_samples_leaf}")
        for name in ("max_depth", "max_features", "bootstrap"):
            if len(getattr(self, name)) == 0:
                raise EmptySpace(f"{name} has no choices")
        for depth in self.max_depth:
            if depth is not None and (not isinstance(depth, int) or depth < 1):
                raise InvalidConfig(f"bad max_depth choice {depth!r}")
        for mf in self.max_features:
            if isinstance(mf, str):
                if mf not in ("sqrt", "log2"):
                    raise InvalidConfig(f"bad max_features choice {mf!r}")
            elif not 0.0 < float(mf) <= 1.0:
                raise InvalidConfig(f"bad max_features fraction {mf!r}")
        for b in self.bootstrap:
            if not isinstance(b, bool):
                raise InvalidConfig(f"bad bootstrap choice {b!r}")


DEFAULT_SPACE = SearchSpace()


@dataclass(frozen=True)
class CVResult:
    params: HyperParams
    fold_scores: tuple[float, ...]
    mean_score: float
    sample_index: int


def sample_hyperparams(space: SearchSpace, n_iter: int, seed: int) -> list[HyperParams]:
    """n_iter configurations, every field drawn uniformly and independently."""
    if n_iter < 1:
        raise InvalidConfig(f"n_iter must be >= 1, got {n_iter}")
    rng = rng_from(seed, "sample-hyperparams")
    configs = []
    for _ in range(n_iter):
        n_trees = int(rng.integers(space.n_trees[0], space.n_trees[1] + 1))
        depth = space.max_depth[int(rng.integers(len(space.max_depth)))]
        mss = int(rng.integers(space.min_samples_split[0], space.min_samples_split[1] + 1))
        msl = int(rng.integers(space.min_samples_leaf[0], space.min_samples_leaf[1] + 1))
        mf = space.max_features[int(rng.integers(len(space.max_features)))]
        bs = space.bootstrap[int(rng.integers(len(space.bootstrap)))]
        configs.append(HyperParams(n_trees=n_trees, max_depth=depth,
                                   min_samples_split=mss, min_samples_leaf=msl,
                                   max_features=mf, bootstrap=bs))
    return configs


def stratified_kfold(y, k: int, seed: int, contiguous: bool = False) -> list[np.ndarray]:
    """k disjoint folds with per-class counts differing by at most 1.

    Default mode shuffles each class deterministically and deals
    round-robin; contiguous mode keeps each class's index order and cuts
    it into k blocks, so neighboring windows stay in one fold.
    """
    y = np.asarray(y)
    if k < 2:
        raise InvalidConfig(f"k must be >= 2, got {k}")
    classes, counts = np.unique(y, return_counts=True)
    for c, cnt in zip(classes, counts):
        if cnt < k:
            raise TooFewPerClass(f"class {int(c)} has {int(cnt)} members, need >= {k}")
    rng = rng_from(seed, "stratified-kfold")
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for c in classes:
        idx = np.flatnonzero(y == c)
        if contiguous:
            for i, block in enumerate(np.array_split(idx, k)):
                folds[i].append(block)
        else:
            idx = rng.permutation(idx)
            for i in range(k):
                folds[i].append(idx[i::k])
    return [np.sort(np.concatenate(parts)) for parts in folds]


def cross_val_score(data: Dataset, params: HyperParams, k: int, seed: int,
                    sample_index: int = 0, contiguous: bool = False) -> CVResult:
    """Mean fold accuracy of a forest config over a shared stratified split.

    The folds depend on seed alone, so every config run under one seed
    sees the same split; the fold-i forest is seeded from
    (seed, sample_index, i).
    """
    folds = stratified_kfold(data.y, k, seed, contiguous)
    n = data.n_samples
    scores = []
    for i, test_idx in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        train = data.subset(np.flatnonzero(mask))
        model = fit_random_forest(train, params, derive_seed(seed, sample_index, i))
        labels, _ = predict_random_forest(model, data.X[test_idx])
        scores.append(float(np.mean(labels == data.y[test_idx])))
    return CVResult(params=params, fold_scores=tuple(scores),
                    mean_score=float(np.mean(scores)), sample_index=sample_index)


def random_search(data: Dataset, space: SearchSpace, n_iter: int, k: int,
                  seed: int, contiguous: bool = False):
    """Evaluate n_iter sampled configs; best mean wins, ties to the earliest."""
    configs = sample_hyperparams(space, n_iter, seed)
    results: list[CVResult] = []
    best: CVResult | None = None
    for j, params in enumerate(configs):
        res = cross_val_score(data, params, k, seed, sample_index=j,
                              contiguous=contiguous)
        results.append(res)
        if best is None or res.mean_score > best.mean_score:
            best = res
    return best.params, results


def format_space(space: SearchSpace) -> str:
    """Plain-text key-value rendering, parseable by parse_space_text."""
    def choices(vals):
        return ",".join("none" if v is None else str(v).lower() if isinstance(v, bool)
                        else str(v) for v in vals)

    lines = [
        f"n_trees = {space.n_trees[0]}:{space.n_trees[1]}",
        f"max_depth = {choices(space.max_depth)}",
        f"min_samples_split = {space.min_samples_split[0]}:{space.min_samples_split[1]}",
        f"min_samples_leaf = {space.min_samples_leaf[0]}:{space.min_samples_leaf[1]}",
        f"max_features = {choices(space.max_features)}",
        f"bootstrap = {choices(space.bootstrap)}",
    ]
    return "\n".join(lines) + "\n"


def _parse_int_range(value: str, key: str) -> tuple[int, int]:
    try:
        if ":" in value:
            lo, hi = value.split(":")
            return (int(lo), int(hi))
        single = int(value)
        return (single, single)
    except ValueError:
        raise InvalidConfig(f"cannot parse {key} range {value!r}") from None


def _parse_choice(tok: str):
    tok = tok.strip()
    if tok == "none":
        return None
    if tok in ("true", "false"):
        return tok == "true"
    if tok in ("sqrt", "log2"):
        return tok
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        raise InvalidConfig(f"cannot parse choice {tok!r}") from None


def _parse_choices(value: str) -> tuple:
    out = []
    for tok in value.split(","):
        tok = tok.strip()
        if ":" in tok:
            lo, hi = tok.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        elif tok:
            out.append(_parse_choice(tok))
    return tuple(out)


def parse_space_mapping(mapping: dict[str, str]) -> SearchSpace:
    """Build a SearchSpace from key-value strings (file or config section)."""
    kwargs = {}
    for key, value in mapping.items():
        key = key.strip()
        value = value.strip()
        if key in ("n_trees", "min_samples_split", "min_samples_leaf"):
            kwargs[key] = _parse_int_range(value, key)
        elif key in ("max_depth", "max_features", "bootstrap"):
            kwargs[key] = _parse_choices(value)
        else:
            raise InvalidConfig(f"unknown search-space key {key!r}")
    return SearchSpace(**kwargs)


def parse_space_text(text: str) -> SearchSpace:
    """Parse the plain-text search-space format (one `key = value` per line)."""
    mapping: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("["):
            continue
        if "=" not in line:
            raise InvalidConfig(f"search-space line {line_no} has no '=': {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return parse_space_mapping(mapping)

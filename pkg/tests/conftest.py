import numpy as np
import pytest

from emowalk.learners.dataset import Dataset


def make_blobs(n_per_class: int, n_features: int, classes=(-1, 1), spread=0.3,
               seed: int = 0) -> Dataset:
    """Gaussian blobs, one per class, centered 2 units apart on every axis."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for j, c in enumerate(classes):
        center = np.full(n_features, 2.0 * j)
        xs.append(center + rng.normal(0.0, spread, size=(n_per_class, n_features)))
        ys.append(np.full(n_per_class, c, dtype=np.int64))
    X = np.vstack(xs)
    y = np.concatenate(ys)
    order = rng.permutation(y.size)
    return Dataset(X[order], y[order])


@pytest.fixture(scope="session")
def blob_dataset() -> Dataset:
    return make_blobs(20, 5, classes=(-1, 0, 1), seed=3)

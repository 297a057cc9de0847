import numpy as np
import pytest

from soilpq import pq
from soilpq.preprocess import clean, fit_transform, gen_synthetic


@pytest.fixture(scope="session")
def standardized_dataset():
    """Small standardized synthetic dataset shared by search/persistence tests."""
    table, _ = gen_synthetic(600, 8, 4, seed=11)
    dataset, _ = clean(table)
    transformed, scaler = fit_transform(dataset, set())
    return transformed, scaler


@pytest.fixture(scope="session")
def trained(standardized_dataset):
    dataset, scaler = standardized_dataset
    cb = pq.train(dataset, 2, 4, seed=5, scaler=scaler)
    codes = pq.encode(dataset, cb)
    return dataset, cb, codes


def brute_force_kmeans_sse(points: np.ndarray, k: int) -> float:
    """Global-minimum SSE over all k^N assignments (tiny instances only).

    For every assignment the optimal centroid of a cluster is its mean, so
    enumerating assignments and scoring each against cluster means covers
    every partition into at most k clusters.
    """
    import itertools

    n, d = points.shape
    best = np.inf
    for labels in itertools.product(range(k), repeat=n):
        lab = np.asarray(labels)
        total = 0.0
        for c in range(k):
            members = points[lab == c]
            if len(members):
                centroid = members.mean(axis=0)
                total += ((members - centroid) ** 2).sum()
        best = min(best, total)
    return float(best)

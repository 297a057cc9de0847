import numpy as np
import pytest

from conftest import brute_force_kmeans_sse
from soilpq import kmeans
from soilpq.errors import DimensionMismatch, InvalidParams, NonFinite, TooFewPoints


def test_k_distinct_rows_give_zero_sse():
    points = np.array([[0.0, 0.0], [5.0, 5.0], [10.0, -3.0]])
    model = kmeans.fit(points, 3, seed=0)
    assert model.final_sse == pytest.approx(0.0, abs=1e-12)
    got = {tuple(row) for row in model.centroids}
    assert got == {tuple(row) for row in points}


def test_k_one_is_the_mean():
    rng = np.random.default_rng(0)
    points = rng.normal(size=(40, 3))
    model = kmeans.fit(points, 1, seed=0)
    np.testing.assert_allclose(model.centroids[0], points.mean(axis=0), rtol=1e-12)
    expected = ((points - points.mean(axis=0)) ** 2).sum()
    assert model.final_sse == pytest.approx(expected, rel=1e-12)


def test_two_well_separated_1d_clusters():
    points = np.array([[0.0], [1.0], [9.0], [10.0]])
    model = kmeans.fit(points, 2, seed=0)
    assert sorted(model.centroids[:, 0].tolist()) == [0.5, 9.5]
    assert model.final_sse == pytest.approx(1.0, rel=1e-12)
    assert model.final_sse == pytest.approx(brute_force_kmeans_sse(points, 2), rel=1e-9)


def test_fit_errors():
    with pytest.raises(TooFewPoints):
        kmeans.fit(np.zeros((2, 2)), 3, seed=0)
    with pytest.raises(NonFinite):
        kmeans.fit(np.array([[np.nan, 0.0]]), 1, seed=0)
    with pytest.raises(InvalidParams):
        kmeans.fit(np.zeros((3, 2)), 0, seed=0)
    with pytest.raises(InvalidParams):
        kmeans.fit(np.zeros((3, 2)), 1, seed=0, tol=-1.0)


def test_assign_exact_centroid_and_tie_break():
    centroids = np.array([[0.0], [2.0], [4.0]])
    labels = kmeans.assign(np.array([[4.0], [1.0]]), centroids)
    assert labels[0] == 2
    assert labels[1] == 0  # equidistant from centroids 0 and 1 -> lowest index


def test_assign_matches_brute_force_scan():
    rng = np.random.default_rng(1)
    points = rng.normal(size=(1000, 4))
    centroids = rng.normal(size=(7, 4))
    labels = kmeans.assign(points, centroids)
    expected = np.array([
        min(range(7), key=lambda c: float(((p - centroids[c]) ** 2).sum()))
        for p in points
    ])
    np.testing.assert_array_equal(labels, expected)


def test_assign_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kmeans.assign(np.zeros((3, 2)), np.zeros((2, 3)))


def test_sse_trivial_values():
    points = np.array([[1.0, 1.0], [3.0, 1.0]])
    centroids = points.copy()
    assert kmeans.sse(points, centroids, np.array([0, 1])) == 0.0
    assert kmeans.sse(points, centroids, np.array([0, 0])) == pytest.approx(4.0, rel=1e-12)


def test_sse_matches_double_loop():
    rng = np.random.default_rng(2)
    points = rng.normal(size=(200, 3))
    centroids = rng.normal(size=(5, 3))
    labels = rng.integers(0, 5, size=200)
    expected = 0.0
    for p, lbl in zip(points, labels):
        expected += sum((p[j] - centroids[lbl][j]) ** 2 for j in range(3))
    assert kmeans.sse(points, centroids, labels) == pytest.approx(expected, rel=1e-12)


def test_sse_history_is_non_increasing():
    rng = np.random.default_rng(3)
    for seed in range(5):
        points = rng.normal(size=(120, 3)) * 3
        model = kmeans.fit(points, 6, seed=seed)
        history = model.sse_history
        assert len(history) == model.iterations_run + 1
        for prev, cur in zip(history, history[1:]):
            assert cur <= prev * (1 + 1e-9)


def test_micro_optimality_sample():
    hits = 0
    for i in range(20):
        rng = np.random.default_rng(300 + i)
        n = int(rng.integers(3, 9))
        k = int(rng.integers(1, min(3, n) + 1))
        d = int(rng.integers(1, 3))
        points = rng.normal(size=(n, d))
        model = kmeans.fit(points, k, seed=i)
        best = brute_force_kmeans_sse(points, k)
        if model.final_sse <= best * (1 + 1e-9) + 1e-12:
            hits += 1
    assert hits >= 18


def test_determinism_across_runs_and_threads():
    rng = np.random.default_rng(4)
    points = rng.normal(size=(10_000, 6))
    a = kmeans.fit(points, 13, seed=42, threads=1)
    b = kmeans.fit(points, 13, seed=42, threads=8)
    c = kmeans.fit(points, 13, seed=42, threads=3)
    assert a.centroids.tobytes() == b.centroids.tobytes() == c.centroids.tobytes()
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.final_sse == b.final_sse == c.final_sse


def test_seed_changes_init():
    rng = np.random.default_rng(5)
    points = rng.normal(size=(60, 2))
    a = kmeans.fit(points, 4, seed=0, max_iters=0)
    b = kmeans.fit(points, 4, seed=1, max_iters=0)
    assert a.centroids.tobytes() != b.centroids.tobytes()


def test_assign_fit_fixpoint():
    rng = np.random.default_rng(6)
    points = rng.normal(size=(500, 4))
    model = kmeans.fit(points, 9, seed=7)
    np.testing.assert_array_equal(kmeans.assign(points, model.centroids), model.labels)


def test_final_sse_consistent_with_recomputation():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(300, 3))
    model = kmeans.fit(points, 5, seed=8)
    labels = kmeans.assign(points, model.centroids)
    recomputed = kmeans.sse(points, model.centroids, labels)
    assert model.final_sse == pytest.approx(recomputed, rel=1e-9)


def test_duplicate_heavy_data_converges_without_crash():
    # only 2 distinct values but k=3: forces the degenerate init fallback and
    # the empty-cluster repair path
    points = np.array([[0.0], [0.0], [0.0], [10.0], [10.0]])
    model = kmeans.fit(points, 3, seed=0)
    assert model.final_sse == pytest.approx(0.0, abs=1e-12)
    for prev, cur in zip(model.sse_history, model.sse_history[1:]):
        assert cur <= prev * (1 + 1e-9)


def test_empty_cluster_repair_keeps_sse_monotone():
    # crowding many duplicate points with a few outliers makes empty updates likely
    rng = np.random.default_rng(8)
    base = np.repeat(rng.normal(size=(3, 2)), 30, axis=0)
    points = np.vstack([base, rng.normal(size=(2, 2)) * 50])
    for seed in range(8):
        model = kmeans.fit(points, 5, seed=seed)
        for prev, cur in zip(model.sse_history, model.sse_history[1:]):
            assert cur <= prev * (1 + 1e-9)

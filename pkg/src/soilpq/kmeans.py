"""Seeded Lloyd k-means minimizing the within-cluster sum of squared errors.

Initialization is greedy k-means++ (each new center is the best of a few
candidates drawn proportionally to squared distance), restarted n_init
times from one PCG64 stream; the restart with the lowest final SSE wins,
ties to the earliest restart. A fixed (points, k, seed) triple therefore
always yields the same model. The assignment, update, and SSE passes
stream the rows in fixed-size chunks (default 4096) and combine per-chunk
partial results in ascending chunk order; chunks may be computed by worker
threads, but the combine order makes the output bitwise identical for any
thread count.

Empty clusters arising during an update are reseeded with the point
currently farthest from its assigned centroid (ties: lowest row index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._chunks import DEFAULT_CHUNK_ROWS, chunk_ranges, map_chunks
from .errors import DimensionMismatch, InvalidParams, NonFinite, TooFewPoints

# Floor for the denominator of the relative-improvement stopping rule.
_SSE_FLOOR = 1e-12


@dataclass
class KMeansModel:
    """Trained quantizer: k centroids plus convergence diagnostics."""

    centroids: np.ndarray  # (k, d)
    k: int
    d: int
    final_sse: float
    iterations_run: int
    seed: int
    sse_history: list[float] = field(default_factory=list)  # after init, then per iteration
    labels: np.ndarray | None = None  # final assignment of the training rows


def _validate_points(points: np.ndarray) -> np.ndarray:
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise DimensionMismatch(f"points must be 2-D, got {points.ndim}-D")
    if not np.isfinite(points).all():
        raise NonFinite("points contain NaN or infinity")
    return points


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: candidates drawn proportionally to min squared distance,
    keeping whichever most reduces the potential."""
    n = points.shape[0]
    trials = 2 + int(np.log2(k)) if k > 1 else 1
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[int(rng.integers(n))]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            cumulative = np.cumsum(d2)
            best_idx, best_pot, best_d2 = -1, np.inf, d2
            for _ in range(trials):
                target = rng.random() * total
                idx = min(int(np.searchsorted(cumulative, target, side="right")), n - 1)
                cand_d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
                pot = float(cand_d2.sum())
                if pot < best_pot:
                    best_idx, best_pot, best_d2 = idx, pot, cand_d2
            centroids[i] = points[best_idx]
            d2 = best_d2
        else:
            # every point coincides with a chosen center (duplicate-heavy data)
            centroids[i] = points[int(np.argmax(d2))]
    return centroids


def _assign_and_sse(
    points: np.ndarray,
    centroids: np.ndarray,
    chunk_rows: int,
    threads: int,
) -> tuple[np.ndarray, float]:
    ranges = chunk_ranges(points.shape[0], chunk_rows)

    def job(s: int, e: int) -> tuple[np.ndarray, float]:
        d2 = cdist(points[s:e], centroids, "sqeuclidean")
        labels = d2.argmin(axis=1)  # argmin keeps the lowest index on ties
        return labels, float(d2[np.arange(e - s), labels].sum())

    parts = map_chunks(job, ranges, threads)
    labels = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    sse_total = 0.0
    for _, part_sse in parts:  # ascending chunk order
        sse_total += part_sse
    return labels, sse_total


def _update_centroids(
    points: np.ndarray,
    labels: np.ndarray,
    old_centroids: np.ndarray,
    k: int,
    chunk_rows: int,
    threads: int,
) -> np.ndarray:
    n, d = points.shape
    ranges = chunk_ranges(n, chunk_rows)

    def job(s: int, e: int) -> tuple[np.ndarray, np.ndarray]:
        sums = np.zeros((k, d))
        np.add.at(sums, labels[s:e], points[s:e])
        return sums, np.bincount(labels[s:e], minlength=k)

    sums = np.zeros((k, d))
    counts = np.zeros(k, dtype=np.int64)
    for part_sums, part_counts in map_chunks(job, ranges, threads):
        sums += part_sums
        counts += part_counts

    centroids = old_centroids.copy()
    nonempty = counts > 0
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

    empties = np.flatnonzero(~nonempty)
    if empties.size:
        diffs = points - centroids[labels]
        dist_own = (diffs * diffs).sum(axis=1)
        for c in empties:  # ascending cluster index
            far = int(np.argmax(dist_own))  # first max = lowest row index on ties
            centroids[c] = points[far]
            dist_own[far] = -1.0  # each repair consumes a distinct point
    return centroids


def _lloyd_run(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int,
    tol: float,
    chunk_rows: int,
    threads: int,
) -> tuple[np.ndarray, np.ndarray, float, list[float], int]:
    centroids = _plus_plus_init(points, k, rng)
    labels, sse_value = _assign_and_sse(points, centroids, chunk_rows, threads)
    history = [sse_value]
    iterations = 0
    for _ in range(max_iters):
        if sse_value == 0.0:
            break  # perfect fit; an update could only add rounding noise
        centroids = _update_centroids(points, labels, centroids, k, chunk_rows, threads)
        labels, new_sse = _assign_and_sse(points, centroids, chunk_rows, threads)
        iterations += 1
        history.append(new_sse)
        improvement = (sse_value - new_sse) / max(sse_value, _SSE_FLOOR)
        sse_value = new_sse
        if improvement < tol:
            break
    return centroids, labels, sse_value, history, iterations


def fit(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    n_init: int = 10,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> KMeansModel:
    """Fit k centroids: n_init restarts of greedy k-means++ plus Lloyd iterations.

    Each restart runs until the relative SSE improvement falls below tol or
    max_iters is hit; the restart with the lowest final SSE is returned
    (ties keep the earliest). The returned model's logged SSE sequence is
    non-increasing.

    Args:
        points: (N, d) finite matrix, N >= k.
        k: cluster count, >= 1.
        seed: RNG seed; all restarts draw from this one stream.
        max_iters: per-restart cap on update+assign iterations.
        tol: relative-improvement stopping threshold, >= 0.
        n_init: independent restarts, best-of kept.
        chunk_rows: accumulation chunk size (fixed => bitwise-stable output).
        threads: worker threads for the chunked passes.

    Returns:
        KMeansModel with final centroids, labels, SSE, and the SSE history.
    """
    points = _validate_points(points)
    n = points.shape[0]
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")
    if n < k:
        raise TooFewPoints(f"{n} points cannot support k={k} clusters")
    if tol < 0:
        raise InvalidParams(f"tol must be >= 0, got {tol}")
    if max_iters < 0:
        raise InvalidParams(f"max_iters must be >= 0, got {max_iters}")
    if n_init < 1:
        raise InvalidParams(f"n_init must be >= 1, got {n_init}")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd_run(points, k, rng, max_iters, tol, chunk_rows, threads)
        if best is None or run[2] < best[2]:
            best = run

    centroids, labels, sse_value, history, iterations = best
    return KMeansModel(
        centroids=centroids,
        k=k,
        d=points.shape[1],
        final_sse=sse_value,
        iterations_run=iterations,
        seed=seed,
        sse_history=history,
        labels=labels,
    )


def assign(
    points: np.ndarray,
    centroids: np.ndarray,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> np.ndarray:
    """Label each point with its nearest centroid (squared L2, ties to lowest index)."""
    points = _validate_points(points)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[1] != points.shape[1]:
        raise DimensionMismatch(
            f"centroids shape {centroids.shape} incompatible with points "
            f"of dimension {points.shape[1]}"
        )
    labels, _ = _assign_and_sse(points, centroids, chunk_rows, threads)
    return labels


def sse(
    points: np.ndarray,
    centroids: np.ndarray,
    labels: np.ndarray,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
    threads: int = 1,
) -> float:
    """Sum over clusters of squared distances from members to their centroid."""
    points = _validate_points(points)
    centroids = np.asarray(centroids, dtype=np.float64)
    labels = np.asarray(labels)
    if centroids.ndim != 2 or centroids.shape[1] != points.shape[1]:
        raise DimensionMismatch(
            f"centroids shape {centroids.shape} incompatible with points "
            f"of dimension {points.shape[1]}"
        )
    if labels.shape != (points.shape[0],):
        raise DimensionMismatch(
            f"labels shape {labels.shape} does not match {points.shape[0]} points"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= centroids.shape[0]):
        raise DimensionMismatch("labels reference centroids that do not exist")

    ranges = chunk_ranges(points.shape[0], chunk_rows)

    def job(s: int, e: int) -> float:
        diffs = points[s:e] - centroids[labels[s:e]]
        return float((diffs * diffs).sum())

    total = 0.0
    for part in map_chunks(job, ranges, threads):  # ascending chunk order
        total += part
    return total

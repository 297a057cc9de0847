"""(subspaces x centroids) grid search and Pareto-front extraction.

Each grid cell trains a fresh codebook with the shared base seed, timing
the train and encode phases separately (wall clock); cells whose
parameters violate a training precondition are recorded as skipped with
the reason rather than dropped. Cells run serially so the timings stay
honest.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from statistics import median

from numbers import Real

from . import pq
from .errors import EmptyGrid, SoilPQError
from .preprocess import Dataset


@dataclass
class SweepRecord:
    """One (M, K) configuration's measurements."""

    M: int
    K: int
    num_classes: int
    train_seconds: float
    encode_seconds: float
    mse: float
    rmse: float
    seed: int
    status: str = "ok"
    reason: str = ""


@dataclass
class ParetoPoint:
    record: SweepRecord
    dominated: bool


def run_sweep(
    data: Dataset,
    m_list: list[int],
    k_list: list[int],
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    repeats: int = 1,
    threads: int = 1,
) -> list[SweepRecord]:
    """Train/encode every (M, K) pair in the Cartesian product of the lists.

    With repeats > 1 the reported times are medians over the repetitions
    (the trained model is identical each time, so only timings vary).
    """
    if not m_list or not k_list:
        raise EmptyGrid("subspace and centroid lists must be non-empty")
    if repeats < 1:
        raise EmptyGrid(f"repeats must be >= 1, got {repeats}")
    records = []
    for m in m_list:
        for k in k_list:
            records.append(
                _run_cell(data, m, k, seed, max_iters, tol, repeats, threads)
            )
    return records


def _run_cell(data, m, k, seed, max_iters, tol, repeats, threads) -> SweepRecord:
    nan = float("nan")
    try:
        train_times, encode_times = [], []
        for _ in range(repeats):
            t0 = time.perf_counter()
            cb = pq.train(data, m, k, seed=seed, max_iters=max_iters, tol=tol, threads=threads)
            t1 = time.perf_counter()
            codes = pq.encode(data, cb, threads=threads)
            t2 = time.perf_counter()
            train_times.append(t1 - t0)
            encode_times.append(t2 - t1)
        mse, rmse = pq.reconstruction_error(data, cb, codes=codes)
        return SweepRecord(
            M=m,
            K=k,
            num_classes=cb.num_classes,
            train_seconds=median(train_times),
            encode_seconds=median(encode_times),
            mse=mse,
            rmse=rmse,
            seed=seed,
        )
    except SoilPQError as exc:
        try:
            classes = pq.num_classes(m, k)
        except SoilPQError:
            classes = 0
        return SweepRecord(
            M=m,
            K=k,
            num_classes=classes,
            train_seconds=nan,
            encode_seconds=nan,
            mse=nan,
            rmse=nan,
            seed=seed,
            status="skipped",
            reason=str(exc),
        )


def pareto_front(
    records: list[SweepRecord],
    objectives: tuple[str, str] = ("mse", "train_seconds"),
) -> list[ParetoPoint]:
    """Flag each measured record as dominated or not (both objectives minimized).

    A record is dominated iff some other record is <= in both objectives and
    strictly < in at least one. Skipped records are ignored. The output is
    sorted by the first objective ascending (ties by the second, then M, K),
    so it is invariant under permutations of the input.
    """
    usable = [r for r in records if r.status == "ok"]
    if not usable:
        raise EmptyGrid("no measured records to rank")
    for name in objectives:
        for r in usable:
            v = getattr(r, name, None)
            if not isinstance(v, Real) or math.isnan(v):
                raise EmptyGrid(f"record (M={r.M}, K={r.K}) has no numeric '{name}'")

    vals = [(getattr(r, objectives[0]), getattr(r, objectives[1])) for r in usable]
    flagged = []
    for i, (a0, a1) in enumerate(vals):
        dominated = any(
            (b0 <= a0 and b1 <= a1) and (b0 < a0 or b1 < a1)
            for j, (b0, b1) in enumerate(vals)
            if j != i
        )
        flagged.append((vals[i], usable[i], dominated))
    flagged.sort(key=lambda t: (t[0][0], t[0][1], t[1].M, t[1].K))
    return [ParetoPoint(record=r, dominated=d) for _, r, d in flagged]

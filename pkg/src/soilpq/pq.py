"""Product quantizer over contiguous feature blocks.

R^D is split into M contiguous subspaces of D/M columns each; every
subspace gets its own K-centroid k-means codebook (subspace j is seeded
with seed + j so the whole training run is one-seed reproducible). A
vector encodes to M small integers, one nearest-centroid index per
subspace, and a code collapses to a single class id by big-endian
mixed-radix arithmetic (id = sum_j code_j * K^(M-1-j)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kmeans
from .errors import (
    CodeOutOfRange,
    DimensionMismatch,
    IndivisibleDims,
    InvalidParams,
    Overflow,
    TooFewPoints,
)
from .preprocess import Dataset, Scaler

MAX_K = 65536  # code entries are stored as u16
_INT64_MAX = 2**63 - 1


def num_classes(m: int, k: int) -> int:
    """Exact K^M, the number of distinct class ids; errors past int64 range."""
    if m < 1 or k < 1:
        raise InvalidParams(f"need M >= 1 and K >= 1, got M={m}, K={k}")
    n = k**m  # exact Python integer arithmetic
    if n > _INT64_MAX:
        raise Overflow(f"K^M = {k}^{m} = {n} exceeds the signed 64-bit class-id range")
    return n


@dataclass(eq=False)
class Codebook:
    """M x K x (D/M) centroids plus training metadata.

    The optional scaler ties the codebook to the transform chain its
    training data went through, so raw query vectors can be standardized
    identically at search time.
    """

    D: int
    M: int
    K: int
    centroids: np.ndarray  # (M, K, D/M)
    subspace_sse: list[float]
    seed: int
    scaler: Scaler | None = None
    _sdc_tables: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.M < 1 or self.D < 1 or self.D % self.M != 0:
            raise IndivisibleDims(self.D, self.M)
        if not 1 <= self.K <= MAX_K:
            raise InvalidParams(f"K must be in [1, {MAX_K}], got {self.K}")
        num_classes(self.M, self.K)  # class ids must fit in int64
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        expected = (self.M, self.K, self.sub_dim)
        if self.centroids.shape != expected:
            raise DimensionMismatch(
                f"centroids shape {self.centroids.shape}, expected {expected}"
            )
        if not np.isfinite(self.centroids).all():
            raise InvalidParams("centroids must be finite")
        if len(self.subspace_sse) != self.M:
            raise DimensionMismatch(
                f"{len(self.subspace_sse)} per-subspace SSE values for M={self.M}"
            )

    @property
    def sub_dim(self) -> int:
        return self.D // self.M

    @property
    def num_classes(self) -> int:
        return num_classes(self.M, self.K)

    @property
    def total_sse(self) -> float:
        return float(sum(self.subspace_sse))

    def subspace_columns(self, j: int) -> slice:
        return slice(j * self.sub_dim, (j + 1) * self.sub_dim)

    def sdc_tables(self) -> np.ndarray:
        """(M, K, K) inter-centroid squared distances, built lazily and cached."""
        if self._sdc_tables is None:
            tables = np.empty((self.M, self.K, self.K))
            for j in range(self.M):
                c = self.centroids[j]
                diffs = c[:, None, :] - c[None, :, :]
                tables[j] = (diffs * diffs).sum(axis=2)
            self._sdc_tables = tables
        return self._sdc_tables


@dataclass(eq=False)
class CodeMatrix:
    """N x M encoded rows; row ids track provenance through saves/loads."""

    entries: np.ndarray  # (N, M) uint16
    K: int
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise DimensionMismatch(f"code entries must be 2-D, got {entries.ndim}-D")
        if entries.size and (entries.min() < 0 or entries.max() >= self.K):
            raise CodeOutOfRange(f"code entries must lie in [0, {self.K})")
        self.entries = entries.astype(np.uint16)
        if self.row_ids is None:
            self.row_ids = np.arange(entries.shape[0], dtype=np.int64)
        else:
            self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
            if self.row_ids.shape != (entries.shape[0],):
                raise DimensionMismatch(
                    f"row_ids shape {self.row_ids.shape} does not match N={entries.shape[0]}"
                )

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def M(self) -> int:
        return self.entries.shape[1]


def _as_matrix(data: Dataset | np.ndarray) -> np.ndarray:
    feats = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionMismatch(f"expected an (N, D) matrix, got {feats.ndim}-D input")
    return feats


def train(
    data: Dataset | np.ndarray,
    m: int,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    threads: int = 1,
    scaler: Scaler | None = None,
) -> Codebook:
    """Train one k-means codebook per contiguous subspace.

    Subspace j covers columns [j*D/M, (j+1)*D/M) and is fitted with seed
    seed + j. The quantization objective decomposes across subspaces, so
    the codebook's total SSE is the sum of the per-subspace k-means SSEs.

    Args:
        data: standardized (N, D) training matrix or Dataset.
        m: subspace count; D must be divisible by m.
        k: centroids per subspace, 1 <= k <= 65536 and N >= k.
        scaler: optional transform record to embed for query-time reuse.
    """
    feats = _as_matrix(data)
    n, d = feats.shape
    if m < 1 or d % m != 0:
        raise IndivisibleDims(d, m)
    if not 1 <= k <= MAX_K:
        raise InvalidParams(f"K must be in [1, {MAX_K}], got {k}")
    if n < k:
        raise TooFewPoints(f"{n} rows cannot support K={k} centroids per subspace")
    num_classes(m, k)

    stds = feats.std(axis=0)
    off = np.flatnonzero(np.abs(stds - 1.0) > 0.1)
    if off.size:
        names = (
            [data.feature_names[j] for j in off]
            if isinstance(data, Dataset)
            else [f"column {j}" for j in off]
        )
        warnings.warn(
            "training data does not look standardized (std deviates from 1 by "
            f"more than 0.1): {', '.join(map(str, names[:8]))}"
            + ("..." if len(names) > 8 else ""),
            UserWarning,
            stacklevel=2,
        )

    sub_dim = d // m
    centroids = np.empty((m, k, sub_dim))
    subspace_sse = []
    for j in range(m):
        block = feats[:, j * sub_dim : (j + 1) * sub_dim]
        model = kmeans.fit(block, k, seed=seed + j, max_iters=max_iters, tol=tol, threads=threads)
        centroids[j] = model.centroids
        subspace_sse.append(model.final_sse)

    return Codebook(
        D=d,
        M=m,
        K=k,
        centroids=centroids,
        subspace_sse=subspace_sse,
        seed=seed,
        scaler=scaler,
    )


def encode(data: Dataset | np.ndarray, cb: Codebook, threads: int = 1):
    """Map vectors to nearest-centroid index tuples.

    A single (D,) vector returns a (M,) uint16 code; an (N, D) matrix or
    Dataset returns a CodeMatrix. Ties go to the lowest centroid index.
    """
    arr = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    single = arr.ndim == 1
    feats = arr.reshape(1, -1) if single else _as_matrix(arr)
    if feats.shape[1] != cb.D:
        raise DimensionMismatch(f"vectors have dimension {feats.shape[1]}, codebook expects {cb.D}")
    codes = np.empty((feats.shape[0], cb.M), dtype=np.uint16)
    for j in range(cb.M):
        labels = kmeans.assign(feats[:, cb.subspace_columns(j)], cb.centroids[j], threads=threads)
        codes[:, j] = labels.astype(np.uint16)
    if single:
        return codes[0]
    return CodeMatrix(entries=codes, K=cb.K)


def _entries_of(codes: CodeMatrix | np.ndarray, cb: Codebook) -> tuple[np.ndarray, bool]:
    if isinstance(codes, CodeMatrix):
        arr, single = codes.entries, False
    else:
        arr = np.asarray(codes)
        single = arr.ndim == 1
        arr = arr.reshape(1, -1) if single else arr
    if arr.ndim != 2 or arr.shape[1] != cb.M:
        raise DimensionMismatch(f"codes have shape {arr.shape}, codebook expects M={cb.M} entries")
    if arr.size and (arr.min() < 0 or arr.max() >= cb.K):
        raise CodeOutOfRange(f"code entries must lie in [0, {cb.K})")
    return arr.astype(np.int64), single


def decode(codes: CodeMatrix | np.ndarray, cb: Codebook) -> np.ndarray:
    """Reconstruct vectors by concatenating each code's selected centroids."""
    arr, single = _entries_of(codes, cb)
    out = np.empty((arr.shape[0], cb.D))
    for j in range(cb.M):
        out[:, cb.subspace_columns(j)] = cb.centroids[j][arr[:, j]]
    return out[0] if single else out


def reconstruction_error(
    data: Dataset | np.ndarray,
    cb: Codebook,
    codes: CodeMatrix | None = None,
    threads: int = 1,
) -> tuple[float, float]:
    """Mean squared round-trip error and its square root.

    mse = (1/N) * sum_i ||x_i - decode(encode(x_i))||^2. Pass codes to
    reuse an existing encoding instead of re-encoding.
    """
    feats = _as_matrix(data)
    if feats.shape[1] != cb.D:
        raise DimensionMismatch(f"data has dimension {feats.shape[1]}, codebook expects {cb.D}")
    if codes is None:
        codes = encode(feats, cb, threads=threads)
    if codes.n_rows != feats.shape[0]:
        raise DimensionMismatch(f"{codes.n_rows} codes for {feats.shape[0]} rows")
    recon = decode(codes, cb)
    diffs = feats - recon
    mse = float((diffs * diffs).sum(axis=1).mean())
    return mse, float(np.sqrt(mse))


def class_id(code: np.ndarray, k: int) -> int:
    """Collapse one code to its class id (big-endian mixed radix)."""
    code = np.asarray(code)
    if code.ndim != 1 or code.size < 1:
        raise DimensionMismatch("code must be a non-empty 1-D index tuple")
    if code.min() < 0 or code.max() >= k:
        raise CodeOutOfRange(f"code entries must lie in [0, {k})")
    out = 0
    for entry in code.tolist():  # Horner form of sum_j code_j * K^(M-1-j)
        out = out * k + int(entry)
    return out


def class_id_inverse(cid: int, m: int, k: int) -> np.ndarray:
    """Recover the unique code whose class id is cid."""
    total = num_classes(m, k)
    if not 0 <= cid < total:
        raise CodeOutOfRange(f"class id {cid} outside [0, {total})")
    code = np.empty(m, dtype=np.uint16)
    for j in range(m - 1, -1, -1):
        cid, digit = divmod(cid, k)
        code[j] = digit
    return code


def class_ids(codes: CodeMatrix, k: int) -> np.ndarray:
    """Vectorized class ids for a whole code matrix (int64)."""
    m = codes.M
    num_classes(m, k)  # guarantees no int64 overflow below
    weights = np.array([k ** (m - 1 - j) for j in range(m)], dtype=np.int64)
    return codes.entries.astype(np.int64) @ weights

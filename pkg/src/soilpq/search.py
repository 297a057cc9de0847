"""Lookup-table distances, exhaustive approximate k-NN, and the analog index.

ADC (asymmetric): the raw query is compared against encoded rows through a
per-query (M, K) table of squared query-subvector-to-centroid distances;
summing M lookups and taking a square root gives exactly the distance from
the query to the row's reconstruction. SDC (symmetric) encodes the query
too and reads precomputed inter-centroid tables.

The inverted index groups rows by class id (exact-code posting lists), so
an "analog" query returns every row whose code matches the query's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._chunks import DEFAULT_CHUNK_ROWS, chunk_ranges, map_chunks
from .errors import CodeOutOfRange, DimensionMismatch, InvalidParams
from .pq import Codebook, CodeMatrix, class_ids, encode


class Neighbor(NamedTuple):
    row_id: int
    distance: float


@dataclass
class InvertedIndex:
    """class id -> ascending row ids; lists are disjoint and cover all rows."""

    classes: dict[int, np.ndarray]
    total_rows: int

    def postings(self, cid: int) -> np.ndarray:
        return self.classes.get(cid, np.empty(0, dtype=np.int64))


def build_lookup_table(y: np.ndarray, cb: Codebook) -> np.ndarray:
    """(M, K) squared distances from each query subvector to every centroid."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (cb.D,):
        raise DimensionMismatch(f"query has shape {y.shape}, codebook expects ({cb.D},)")
    table = np.empty((cb.M, cb.K))
    for j in range(cb.M):
        diffs = cb.centroids[j] - y[cb.subspace_columns(j)]
        table[j] = (diffs * diffs).sum(axis=1)
    return table


def _check_code(code: np.ndarray, m: int, k: int) -> np.ndarray:
    code = np.asarray(code)
    if code.shape != (m,):
        raise DimensionMismatch(f"code has shape {code.shape}, expected ({m},)")
    if code.min() < 0 or code.max() >= k:
        raise CodeOutOfRange(f"code entries must lie in [0, {k})")
    return code.astype(np.int64)


def adc_distance(code: np.ndarray, table: np.ndarray) -> float:
    """Distance from the table's query to the code's reconstruction.

    Equals ||y - decode(code)|| exactly (up to float rounding): the lookup
    evaluation introduces no approximation beyond the encoding itself.
    """
    m, k = table.shape
    code = _check_code(code, m, k)
    return float(np.sqrt(table[np.arange(m), code].sum()))


def sdc_distance(code_y: np.ndarray, code_x: np.ndarray, cb: Codebook) -> float:
    """Distance between two codes' reconstructions via inter-centroid tables."""
    cy = _check_code(code_y, cb.M, cb.K)
    cx = _check_code(code_x, cb.M, cb.K)
    tables = cb.sdc_tables()
    return float(np.sqrt(tables[np.arange(cb.M), cy, cx].sum()))


def _scan_distances(
    entries: np.ndarray,
    table: np.ndarray,
    chunk_rows: int,
    threads: int,
) -> np.ndarray:
    """Per-row sqrt(sum_j table[j, entry_j]); rows are independent, so chunk
    boundaries cannot change any value."""
    m = table.shape[0]
    ranges = chunk_ranges(entries.shape[0], chunk_rows)

    def job(s: int, e: int) -> np.ndarray:
        block = entries[s:e].astype(np.int64)
        acc = table[0, block[:, 0]].copy()
        for j in range(1, m):
            acc += table[j, block[:, j]]
        return acc

    parts = map_chunks(job, ranges, threads)
    d2 = np.concatenate(parts) if parts else np.empty(0)
    return np.sqrt(d2)


def knn(
    y: np.ndarray,
    codes: CodeMatrix,
    cb: Codebook,
    n: int,
    mode: str = "adc",
    threads: int = 1,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> list[Neighbor]:
    """The n nearest encoded rows, sorted ascending by (distance, row_id).

    mode "adc" scans the raw query's lookup table; mode "sdc" encodes the
    query first and scans the inter-centroid tables. Returns all rows when
    n exceeds the matrix size.
    """
    if n < 1:
        raise InvalidParams(f"n must be >= 1, got {n}")
    if codes.n_rows == 0:
        raise InvalidParams("codes matrix is empty")
    if mode == "adc":
        table = build_lookup_table(y, cb)
    elif mode == "sdc":
        code_y = encode(np.asarray(y, dtype=np.float64), cb)
        table = cb.sdc_tables()[np.arange(cb.M), code_y.astype(np.int64), :]
    else:
        raise InvalidParams(f"mode must be 'adc' or 'sdc', got {mode!r}")

    dist = _scan_distances(codes.entries, table, chunk_rows, threads)
    order = np.lexsort((codes.row_ids, dist))
    top = order[: min(n, codes.n_rows)]
    return [Neighbor(int(codes.row_ids[i]), float(dist[i])) for i in top]


def build_inverted_index(codes: CodeMatrix, cb: Codebook) -> InvertedIndex:
    """Group row ids by class id; posting lists are sorted and disjoint."""
    if codes.M != cb.M:
        raise DimensionMismatch(f"codes have M={codes.M}, codebook expects M={cb.M}")
    if codes.entries.size and int(codes.entries.max()) >= cb.K:
        raise CodeOutOfRange(f"code entries must lie in [0, {cb.K})")
    ids = class_ids(codes, cb.K)
    classes: dict[int, np.ndarray] = {}
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    boundaries = np.flatnonzero(np.diff(sorted_ids)) + 1
    for group in np.split(order, boundaries):
        cid = int(ids[group[0]])
        classes[cid] = np.sort(codes.row_ids[group])
    return InvertedIndex(classes=classes, total_rows=codes.n_rows)


def analog_lookup(y: np.ndarray, idx: InvertedIndex, cb: Codebook) -> np.ndarray:
    """Row ids whose code matches the query's — the query point's analogs."""
    code = encode(np.asarray(y, dtype=np.float64), cb)
    cid = 0
    for entry in code.tolist():
        cid = cid * cb.K + int(entry)
    return idx.postings(cid)

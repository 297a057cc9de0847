"""Bit-exact file formats.

Codebooks and scalers are JSON (human-inspectable; floats written as the
shortest decimal that round-trips the exact binary64 value). Code matrices
are binary: magic "PQC1", then little-endian u32 N, u16 M, u16 K, then
N*M u16 entries row-major — 12 + 2*N*M bytes exactly. Assignments and
sweep results are CSV.
"""

from __future__ import annotations

import csv
import json
import math
import struct

import numpy as np

from .errors import (
    CodeOutOfRange,
    CorruptFile,
    DimensionMismatch,
    FormatVersionMismatch,
    IoError,
    MissingCoords,
    SchemaError,
)
from .pq import Codebook, CodeMatrix, class_ids
from .preprocess import Scaler, ScalerColumn
from .sweep import ParetoPoint, SweepRecord

CODEBOOK_FORMAT_VERSION = 1
SCALER_FORMAT_VERSION = 1
CODES_MAGIC = b"PQC1"
_CODES_HEADER = struct.Struct("<IHH")  # N, M, K after the 4 magic bytes

SWEEP_FIELDS = [
    "M", "K", "num_classes", "train_seconds", "encode_seconds",
    "mse", "rmse", "seed", "status", "reason",
]


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _get(doc: dict, key: str, kind, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{path}.{key}: missing required field")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{path}.{key}: expected a number, got {type(value).__name__}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{path}.{key}: expected an integer, got {type(value).__name__}")
        return value
    if not isinstance(value, kind):
        raise SchemaError(f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top-level JSON value must be an object")
    return doc


def _write_json(doc: dict, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _check_version(doc: dict, expected: int, path) -> None:
    version = _get(doc, "format_version", int, str(path))
    if version != expected:
        raise FormatVersionMismatch(
            f"{path}: format_version {version}, this build reads version {expected}"
        )


# ---------------------------------------------------------------------------
# Scaler JSON
# ---------------------------------------------------------------------------


def _scaler_doc(scaler: Scaler) -> dict:
    return {
        "columns": [
            {
                "name": c.name,
                "is_ph": c.is_ph,
                "log_applied": c.log_applied,
                "mean": c.mean,
                "std": c.std,
            }
            for c in scaler.columns
        ]
    }


def _scaler_from_doc(doc: dict, path: str) -> Scaler:
    columns = _get(doc, "columns", list, path)
    out = []
    for i, col in enumerate(columns):
        p = f"{path}.columns[{i}]"
        if not isinstance(col, dict):
            raise SchemaError(f"{p}: expected an object")
        out.append(
            ScalerColumn(
                name=_get(col, "name", str, p),
                is_ph=_get(col, "is_ph", bool, p),
                mean=_get(col, "mean", float, p),
                std=_get(col, "std", float, p),
                log_applied=bool(col.get("log_applied", True)),
            )
        )
    return Scaler(columns=out)


def save_scaler(scaler: Scaler, path) -> None:
    doc = {"format_version": SCALER_FORMAT_VERSION}
    doc.update(_scaler_doc(scaler))
    _write_json(doc, path)


def load_scaler(path) -> Scaler:
    doc = _read_json(path)
    _check_version(doc, SCALER_FORMAT_VERSION, path)
    return _scaler_from_doc(doc, "scaler")


# ---------------------------------------------------------------------------
# Codebook JSON
# ---------------------------------------------------------------------------


def save_codebook(cb: Codebook, path) -> None:
    doc = {
        "format_version": CODEBOOK_FORMAT_VERSION,
        "D": cb.D,
        "M": cb.M,
        "K": cb.K,
        "sub_dim": cb.sub_dim,
        "seed": cb.seed,
        "subspace_sse": [float(s) for s in cb.subspace_sse],
        "centroids": cb.centroids.tolist(),
        "scaler": None if cb.scaler is None else _scaler_doc(cb.scaler),
    }
    _write_json(doc, path)


def load_codebook(path) -> Codebook:
    doc = _read_json(path)
    _check_version(doc, CODEBOOK_FORMAT_VERSION, path)
    p = "codebook"
    d = _get(doc, "D", int, p)
    m = _get(doc, "M", int, p)
    k = _get(doc, "K", int, p)
    sub_dim = _get(doc, "sub_dim", int, p)
    if m < 1 or d != m * sub_dim:
        raise SchemaError(f"{p}: D={d} inconsistent with M={m}, sub_dim={sub_dim}")
    seed = _get(doc, "seed", int, p)
    sse = _get(doc, "subspace_sse", list, p)
    raw = _get(doc, "centroids", list, p)
    if len(raw) != m:
        raise SchemaError(f"{p}.centroids: {len(raw)} subspaces, expected M={m}")
    centroids = np.empty((m, k, sub_dim))
    for j, block in enumerate(raw):
        if not isinstance(block, list) or len(block) != k:
            raise SchemaError(f"{p}.centroids[{j}]: expected K={k} centroid rows")
        for i, row in enumerate(block):
            if not isinstance(row, list) or len(row) != sub_dim:
                raise SchemaError(
                    f"{p}.centroids[{j}][{i}]: expected {sub_dim} values"
                )
            for c, value in enumerate(row):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise SchemaError(f"{p}.centroids[{j}][{i}][{c}]: expected a number")
                centroids[j, i, c] = float(value)
    scaler_doc = doc.get("scaler")
    scaler = None if scaler_doc is None else _scaler_from_doc(scaler_doc, f"{p}.scaler")
    return Codebook(
        D=d,
        M=m,
        K=k,
        centroids=centroids,
        subspace_sse=[float(s) for s in sse],
        seed=seed,
        scaler=scaler,
    )


# ---------------------------------------------------------------------------
# Codes binary
# ---------------------------------------------------------------------------


def save_codes(codes: CodeMatrix, path) -> None:
    header = CODES_MAGIC + _CODES_HEADER.pack(codes.n_rows, codes.M, codes.K)
    payload = np.ascontiguousarray(codes.entries, dtype="<u2").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_codes(path) -> CodeMatrix:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(blob) < 4 + _CODES_HEADER.size:
        raise CorruptFile(f"{path}: {len(blob)} bytes is shorter than the 12-byte header")
    if blob[:4] != CODES_MAGIC:
        raise CorruptFile(f"{path}: bad magic {blob[:4]!r}, expected {CODES_MAGIC!r}")
    n, m, k = _CODES_HEADER.unpack(blob[4:12])
    if m < 1 or k < 1:
        raise CorruptFile(f"{path}: header declares M={m}, K={k}")
    expected = 12 + 2 * n * m
    if len(blob) != expected:
        raise CorruptFile(
            f"{path}: {len(blob)} bytes, header (N={n}, M={m}) requires exactly {expected}"
        )
    entries = np.frombuffer(blob, dtype="<u2", offset=12).reshape(n, m).astype(np.uint16)
    if entries.size and int(entries.max()) >= k:
        raise CodeOutOfRange(f"{path}: entry {int(entries.max())} >= K={k}")
    return CodeMatrix(entries=entries, K=k)


# ---------------------------------------------------------------------------
# Assignments CSV
# ---------------------------------------------------------------------------


def save_assignments(codes: CodeMatrix, coords: np.ndarray | None, cb: Codebook, path) -> None:
    """Write `row_id,lon,lat,class_id`, one line per encoded row, order preserved."""
    if coords is None:
        raise MissingCoords("assignments need lon/lat coordinates")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (codes.n_rows, 2):
        raise DimensionMismatch(
            f"coords shape {coords.shape} does not match {codes.n_rows} encoded rows"
        )
    ids = class_ids(codes, cb.K)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row_id", "lon", "lat", "class_id"])
            for rid, (lon, lat), cid in zip(codes.row_ids, coords, ids):
                writer.writerow([int(rid), repr(float(lon)), repr(float(lat)), int(cid)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Sweep / Pareto CSV
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _sweep_row(r: SweepRecord) -> list:
    return [
        r.M, r.K, r.num_classes,
        _num(r.train_seconds), _num(r.encode_seconds),
        _num(r.mse), _num(r.rmse),
        r.seed, r.status, r.reason,
    ]


def save_sweep(records: list[SweepRecord], path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_FIELDS)
            for r in records:
                writer.writerow(_sweep_row(r))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_sweep(path) -> list[SweepRecord]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [
                f for f in SWEEP_FIELDS if f not in reader.fieldnames
            ]:
                raise SchemaError(f"{path}: header must contain {','.join(SWEEP_FIELDS)}")
            records = []
            for lineno, row in enumerate(reader):
                try:
                    records.append(
                        SweepRecord(
                            M=int(row["M"]),
                            K=int(row["K"]),
                            num_classes=int(row["num_classes"]),
                            train_seconds=float(row["train_seconds"] or "nan"),
                            encode_seconds=float(row["encode_seconds"] or "nan"),
                            mse=float(row["mse"] or "nan"),
                            rmse=float(row["rmse"] or "nan"),
                            seed=int(row["seed"]),
                            status=row["status"],
                            reason=row["reason"],
                        )
                    )
                except (TypeError, ValueError) as exc:
                    raise SchemaError(f"{path}: row {lineno}: {exc}") from None
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return records


def save_pareto(points: list[ParetoPoint], path, skipped: list[SweepRecord] = ()) -> None:
    """Write flagged records (dominated true/false), then any skipped rows."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_FIELDS + ["dominated"])
            for p in points:
                writer.writerow(_sweep_row(p.record) + ["true" if p.dominated else "false"])
            for r in skipped:
                writer.writerow(_sweep_row(r) + [""])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc

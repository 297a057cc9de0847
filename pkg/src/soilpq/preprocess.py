"""Row cleaning and the column transform chain for raw tabular features.

The chain applied by fit_transform is, per feature column:

1. log step — natural log of the value; pH columns use the composite
   10**(-pH) followed by the log, which collapses to -pH * ln(10);
2. centering by the column mean;
3. division by the column's population standard deviation.

The fitted Scaler records every per-column parameter so later query
vectors can be pushed through the identical chain (apply_scaler). The
log base is immaterial after standardization; natural log is used.

CSV ingest expects a header row `lon,lat,<feature...>`; empty cells,
"NA" and "NaN" (case-insensitive) are read as missing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllRowsRemoved,
    DimensionMismatch,
    InvalidParams,
    IoError,
    MissingCoords,
    NonPositive,
    SchemaError,
    ZeroVariance,
)

LN10 = math.log(10.0)
COORD_NAMES = ("lon", "lat")

# Accepted missing-value spellings after strip + casefold.
_MISSING = {"", "na", "nan"}

# A column whose post-log std is below this (relative to its mean) is constant
# up to float rounding of the mean.
_ZERO_STD_REL = 1e-13


@dataclass
class RawTable:
    """Header plus an N x (2 + D_raw) value matrix; missing cells are NaN.

    The first two columns are lon/lat in degrees; the rest are features.
    """

    column_names: list[str]
    values: np.ndarray  # (N, 2 + D_raw) float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise SchemaError(f"table values must be 2-D, got {self.values.ndim}-D")
        names = [str(n) for n in self.column_names]
        if any(not n for n in names):
            raise SchemaError("column names must be non-empty")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column name(s): {', '.join(dupes)}")
        if len(names) != self.values.shape[1]:
            raise SchemaError(
                f"{len(names)} column names but {self.values.shape[1]} value columns"
            )
        if len(names) < 2 or tuple(n.lower() for n in names[:2]) != COORD_NAMES:
            raise SchemaError("first two columns must be 'lon' and 'lat'")
        self.column_names = names

    @property
    def feature_names(self) -> list[str]:
        return self.column_names[2:]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class Dataset:
    """Finite N x D feature matrix with optional lon/lat coordinates."""

    features: np.ndarray  # (N, D) float64, all finite
    feature_names: list[str]
    coords: np.ndarray | None = None  # (N, 2) lon/lat

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise SchemaError(f"features must be 2-D, got {self.features.ndim}-D")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise SchemaError(f"dataset needs N >= 1 and D >= 1, got N={n}, D={d}")
        if len(self.feature_names) != d:
            raise SchemaError(
                f"{len(self.feature_names)} feature names but D={d} feature columns"
            )
        if not np.isfinite(self.features).all():
            raise SchemaError("dataset features must be finite (no NaN/inf)")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float64)
            if self.coords.shape != (n, 2):
                raise DimensionMismatch(
                    f"coords shape {self.coords.shape} does not match ({n}, 2)"
                )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class ScalerColumn:
    name: str
    is_ph: bool
    mean: float
    std: float
    log_applied: bool = True


@dataclass
class Scaler:
    """Per-column transform parameters, in dataset feature order."""

    columns: list[ScalerColumn]

    def __post_init__(self):
        for c in self.columns:
            if not c.std > 0:
                raise SchemaError(f"scaler column '{c.name}': std must be > 0, got {c.std!r}")

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_features(self) -> int:
        return len(self.columns)


@dataclass
class CleanSummary:
    """Row-removal counts, one reason per removed row (missing > negative > duplicate)."""

    missing: int
    negative: int
    duplicate: int
    kept: int

    def __str__(self) -> str:
        return (
            f"kept {self.kept} rows (removed: {self.missing} missing, "
            f"{self.negative} negative, {self.duplicate} duplicate-coordinate)"
        )


def clean(raw: RawTable) -> tuple[Dataset, CleanSummary]:
    """Drop rows with missing cells, negative feature values, or repeated coordinates.

    Coordinates may legitimately be negative; only feature columns trigger the
    negative rule. Non-finite cells (NaN or +/-inf) count as missing. Among
    rows sharing a bitwise-identical (lon, lat) pair, the first survivor in
    input order is kept. Row order is otherwise preserved.

    Returns:
        (dataset, summary) where summary counts removals per reason.
    """
    if len(raw.feature_names) == 0:
        raise SchemaError("table has no feature columns")
    values = raw.values
    coords = values[:, :2]
    feats = values[:, 2:]

    missing_mask = ~np.isfinite(values).all(axis=1)
    negative_mask = (feats < 0).any(axis=1) & ~missing_mask
    survivors = ~(missing_mask | negative_mask)

    keep = []
    seen: set[bytes] = set()
    dup = 0
    for i in np.flatnonzero(survivors):
        key = coords[i].tobytes()  # bitwise comparison: -0.0 != 0.0
        if key in seen:
            dup += 1
        else:
            seen.add(key)
            keep.append(i)

    summary = CleanSummary(
        missing=int(missing_mask.sum()),
        negative=int(negative_mask.sum()),
        duplicate=dup,
        kept=len(keep),
    )
    if not keep:
        raise AllRowsRemoved(f"no rows survive cleaning ({summary})")
    idx = np.asarray(keep)
    dataset = Dataset(
        features=feats[idx].copy(),
        feature_names=list(raw.feature_names),
        coords=coords[idx].copy(),
    )
    return dataset, summary


def _log_step(features: np.ndarray, names: list[str], ph_flags: np.ndarray) -> np.ndarray:
    """Apply the per-column log step; pH columns map p -> -p*ln(10)."""
    out = np.empty_like(features)
    for j, name in enumerate(names):
        col = features[:, j]
        if ph_flags[j]:
            out[:, j] = -col * LN10
        else:
            bad = np.flatnonzero(col <= 0)
            if bad.size:
                r = int(bad[0])
                raise NonPositive(name, r, float(col[r]))
            out[:, j] = np.log(col)
    return out


def fit_transform(data: Dataset, ph_columns: set[str]) -> tuple[Dataset, Scaler]:
    """Log-transform, center, and standardize every feature column.

    Args:
        data: cleaned dataset (no missing values; non-pH features > 0).
        ph_columns: names of pH columns, transformed as ln(10**-pH) = -pH*ln(10).

    Returns:
        (transformed dataset, fitted Scaler). Every output column has mean 0
        and population standard deviation 1.
    """
    unknown = set(ph_columns) - set(data.feature_names)
    if unknown:
        raise SchemaError(f"pH column(s) not in dataset: {', '.join(sorted(unknown))}")
    ph_flags = np.array([n in ph_columns for n in data.feature_names])

    logged = _log_step(data.features, data.feature_names, ph_flags)
    means = logged.mean(axis=0)
    stds = logged.std(axis=0)  # population (ddof=0)

    const = stds <= _ZERO_STD_REL * np.maximum(1.0, np.abs(means))
    if const.any():
        raise ZeroVariance([data.feature_names[j] for j in np.flatnonzero(const)])

    standardized = (logged - means) / stds
    scaler = Scaler(
        columns=[
            ScalerColumn(
                name=name,
                is_ph=bool(ph_flags[j]),
                mean=float(means[j]),
                std=float(stds[j]),
            )
            for j, name in enumerate(data.feature_names)
        ]
    )
    out = Dataset(
        features=standardized,
        feature_names=list(data.feature_names),
        coords=None if data.coords is None else data.coords.copy(),
    )
    return out, scaler


def apply_scaler(v: np.ndarray, scaler: Scaler) -> np.ndarray:
    """Push one raw feature vector through a fitted transform chain.

    Applying this to a training row reproduces the transformed dataset row
    bitwise (the ops are elementwise, identical to fit_transform's).
    """
    v = np.asarray(v, dtype=np.float64)
    d = scaler.n_features
    if v.shape != (d,):
        raise DimensionMismatch(f"vector has shape {v.shape}, scaler expects ({d},)")
    ph_flags = np.array([c.is_ph for c in scaler.columns])
    logged = _log_step(v.reshape(1, d), scaler.feature_names, ph_flags)[0]
    means = np.array([c.mean for c in scaler.columns])
    stds = np.array([c.std for c in scaler.columns])
    return (logged - means) / stds


def gen_synthetic(n: int, d: int, g: int, seed: int) -> tuple[RawTable, np.ndarray]:
    """Generate a positive-valued Gaussian-mixture table for pipeline tests.

    Draws g well-separated cluster centers, samples unit-variance Gaussian
    points around them, and shifts every feature column positive so the log
    step is applicable. Coordinates are uniform over the globe. Deterministic
    per seed.

    Returns:
        (table, labels): the raw table and the ground-truth cluster label of
        each row (the test-oracle side channel).
    """
    if d < 1 or g < 1 or n < g:
        raise InvalidParams(f"need n >= g >= 1 and d >= 1, got n={n}, g={g}, d={d}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 10.0, size=(g, d))
    # first g rows cover every cluster once, so no cluster is empty
    labels = np.concatenate([np.arange(g), rng.integers(0, g, size=n - g)])
    feats = centers[labels] + rng.normal(0.0, 1.0, size=(n, d))
    feats = feats - feats.min(axis=0) + 0.5  # per-column shift keeps values >= 0.5
    lon = rng.uniform(-180.0, 180.0, size=n)
    lat = rng.uniform(-90.0, 90.0, size=n)
    table = RawTable(
        column_names=["lon", "lat"] + [f"f{j}" for j in range(d)],
        values=np.column_stack([lon, lat, feats]),
    )
    return table, labels


def corrupt_table(
    table: RawTable, missing_frac: float, negative_frac: float, seed: int
) -> tuple[RawTable, np.ndarray, np.ndarray]:
    """Inject NaN / negative feature cells into disjoint row sets.

    Returns:
        (corrupted table, rows given a NaN cell, rows given a negative cell),
        both index arrays sorted ascending. Used as the cleaning oracle.
    """
    if not (0 <= missing_frac and 0 <= negative_frac and missing_frac + negative_frac <= 1):
        raise InvalidParams("fractions must be >= 0 and sum to <= 1")
    n = table.n_rows
    d = len(table.feature_names)
    if d == 0:
        raise SchemaError("table has no feature columns")
    rng = np.random.default_rng(seed)
    n_miss = int(round(missing_frac * n))
    n_neg = int(round(negative_frac * n))
    perm = rng.permutation(n)
    miss_rows = np.sort(perm[:n_miss])
    neg_rows = np.sort(perm[n_miss : n_miss + n_neg])
    values = table.values.copy()
    for i in miss_rows:
        values[i, 2 + rng.integers(d)] = np.nan
    for i in neg_rows:
        j = 2 + rng.integers(d)
        values[i, j] = -abs(values[i, j]) - 1.0
    return RawTable(list(table.column_names), values), miss_rows, neg_rows


def dataset_from_table(table: RawTable) -> Dataset:
    """Interpret an already-clean table as a Dataset; any missing cell is an error."""
    bad = ~np.isfinite(table.values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise SchemaError(
            f"row {int(r)}, column '{table.column_names[int(c)]}' is missing or "
            "non-finite; run preprocess first"
        )
    if len(table.feature_names) == 0:
        raise SchemaError("table has no feature columns")
    return Dataset(
        features=table.values[:, 2:].copy(),
        feature_names=list(table.feature_names),
        coords=table.values[:, :2].copy(),
    )


# ---------------------------------------------------------------------------
# CSV ingest / export
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the exact binary64 value."""
    return "" if math.isnan(x) else repr(float(x))


def read_raw_csv(path) -> RawTable:
    """Read a `lon,lat,<feature...>` CSV; header required, UTF-8, comma-delimited."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file, header row required") from None
            names = [h.strip() for h in header]
            rows: list[list[float]] = []
            for lineno, cells in enumerate(reader):
                if len(cells) != len(names):
                    raise SchemaError(
                        f"{path}: row {lineno}: {len(cells)} cells, expected {len(names)}"
                    )
                parsed = []
                for name, cell in zip(names, cells):
                    text = cell.strip()
                    if text.casefold() in _MISSING:
                        parsed.append(math.nan)
                        continue
                    try:
                        x = float(text)
                    except ValueError:
                        raise SchemaError(
                            f"{path}: row {lineno}, column '{name}': not a number: {cell!r}"
                        ) from None
                    if math.isinf(x):
                        raise SchemaError(
                            f"{path}: row {lineno}, column '{name}': non-finite value {cell!r}"
                        )
                    parsed.append(x)
                rows.append(parsed)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    values = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return RawTable(column_names=names, values=values)


def write_table_csv(table: RawTable, path) -> None:
    """Write a raw table; missing cells become empty fields."""
    _write_csv(path, table.column_names, table.values)


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Write a dataset as `lon,lat,<feature...>` (coords required)."""
    if dataset.coords is None:
        raise MissingCoords("dataset has no lon/lat coordinates")
    names = ["lon", "lat"] + list(dataset.feature_names)
    _write_csv(path, names, np.column_stack([dataset.coords, dataset.features]))


def _write_csv(path, names: list[str], values: np.ndarray) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for row in values:
                writer.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc

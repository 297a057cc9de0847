import math

import numpy as np
import pytest

from soilpq import kmeans
from soilpq.errors import (
    AllRowsRemoved,
    DimensionMismatch,
    InvalidParams,
    NonPositive,
    SchemaError,
    ZeroVariance,
)
from soilpq.preprocess import (
    LN10,
    Dataset,
    RawTable,
    apply_scaler,
    clean,
    corrupt_table,
    dataset_from_table,
    fit_transform,
    gen_synthetic,
    read_raw_csv,
    write_dataset_csv,
    write_table_csv,
)


def make_table(rows, n_features=None):
    rows = np.asarray(rows, dtype=np.float64)
    d = rows.shape[1] - 2 if n_features is None else n_features
    names = ["lon", "lat"] + [f"f{j}" for j in range(d)]
    return RawTable(column_names=names, values=rows)


# ---------------------------------------------------------------------------
# clean
# ---------------------------------------------------------------------------


def test_clean_drops_missing_row():
    table = make_table([
        [0.0, 0.0, 1.0, 2.0],
        [1.0, 1.0, np.nan, 2.0],
        [2.0, 2.0, 3.0, 4.0],
    ])
    dataset, summary = clean(table)
    assert dataset.n_rows == 2
    assert (summary.missing, summary.negative, summary.duplicate) == (1, 0, 0)
    np.testing.assert_array_equal(dataset.features, [[1.0, 2.0], [3.0, 4.0]])


def test_clean_keeps_first_duplicate_coordinate():
    table = make_table([
        [1.0, 1.0, 5.0],
        [1.0, 1.0, 6.0],
        [2.0, 2.0, 7.0],
    ])
    dataset, summary = clean(table)
    assert summary.duplicate == 1
    np.testing.assert_array_equal(dataset.features[:, 0], [5.0, 7.0])


def test_clean_negative_feature_but_not_coordinate():
    table = make_table([
        [-10.0, -20.0, 1.0],  # negative coords are fine
        [0.0, 0.0, -1.0],
    ])
    dataset, summary = clean(table)
    assert dataset.n_rows == 1
    assert summary.negative == 1


def test_clean_missing_takes_precedence_over_negative():
    table = make_table([[0.0, 0.0, np.nan, -3.0], [1.0, 1.0, 2.0, 2.0]])
    _, summary = clean(table)
    assert (summary.missing, summary.negative) == (1, 0)


def test_clean_all_rows_removed():
    table = make_table([[0.0, 0.0, np.nan]])
    with pytest.raises(AllRowsRemoved):
        clean(table)


def test_clean_no_feature_columns():
    table = RawTable(["lon", "lat"], np.zeros((3, 2)))
    with pytest.raises(SchemaError):
        clean(table)


def test_clean_at_scale_matches_injection_oracle():
    table, _ = gen_synthetic(100_000, 5, 8, seed=3)
    corrupted, miss_rows, neg_rows = corrupt_table(table, 0.05, 0.05, seed=4)
    dataset, summary = clean(corrupted)
    assert summary.missing == len(miss_rows)
    assert summary.negative == len(neg_rows)
    assert summary.duplicate == 0
    assert dataset.n_rows == 100_000 - len(miss_rows) - len(neg_rows)
    # survivors are exactly the uncorrupted rows, order preserved
    bad = set(miss_rows) | set(neg_rows)
    good = [i for i in range(100_000) if i not in bad]
    np.testing.assert_array_equal(dataset.features, table.values[good, 2:])


def test_clean_is_idempotent():
    table, _ = gen_synthetic(300, 4, 3, seed=9)
    corrupted, _, _ = corrupt_table(table, 0.1, 0.1, seed=10)
    dataset, _ = clean(corrupted)
    again = RawTable(
        ["lon", "lat"] + dataset.feature_names,
        np.column_stack([dataset.coords, dataset.features]),
    )
    dataset2, summary2 = clean(again)
    assert (summary2.missing, summary2.negative, summary2.duplicate) == (0, 0, 0)
    np.testing.assert_array_equal(dataset2.features, dataset.features)
    np.testing.assert_array_equal(dataset2.coords, dataset.coords)


# ---------------------------------------------------------------------------
# fit_transform / apply_scaler
# ---------------------------------------------------------------------------


def test_log_step_of_one_is_zero():
    dataset = Dataset(np.array([[1.0], [math.e], [math.e**2]]), ["a"])
    transformed, scaler = fit_transform(dataset, set())
    # post-ln column is [0, 1, 2]: mean 1, population std sqrt(2/3)
    expected = (np.array([0.0, 1.0, 2.0]) - 1.0) / math.sqrt(2.0 / 3.0)
    np.testing.assert_allclose(transformed.features[:, 0], expected, atol=1e-12)
    np.testing.assert_allclose(expected, [-math.sqrt(1.5), 0.0, math.sqrt(1.5)], atol=1e-12)


def test_ph_column_composite_transform():
    dataset = Dataset(np.array([[7.0], [4.0], [9.0]]), ["ph"])
    _, scaler = fit_transform(dataset, {"ph"})
    col = scaler.columns[0]
    assert col.is_ph
    # the log step alone maps 7 -> -7*ln(10); recover it from mean/std bookkeeping
    logged = np.array([-7.0, -4.0, -9.0]) * LN10
    assert abs(col.mean - logged.mean()) < 1e-12
    assert abs(logged[0] - (-7.0 * LN10)) < 1e-12


def test_transform_output_is_standardized():
    table, _ = gen_synthetic(400, 6, 3, seed=21)
    dataset, _ = clean(table)
    transformed, _ = fit_transform(dataset, {"f2"})
    assert np.abs(transformed.features.mean(axis=0)).max() < 1e-9
    assert np.abs(transformed.features.std(axis=0) - 1.0).max() < 1e-9


def test_log_base_is_immaterial_after_standardization():
    table, _ = gen_synthetic(200, 4, 2, seed=22)
    dataset, _ = clean(table)
    transformed, _ = fit_transform(dataset, {"f1"})
    # independent chain with log10 instead of ln
    feats = dataset.features.copy()
    logged = np.empty_like(feats)
    for j, name in enumerate(dataset.feature_names):
        if name == "f1":
            logged[:, j] = np.log10(10.0 ** (-feats[:, j]))
        else:
            logged[:, j] = np.log10(feats[:, j])
    standardized = (logged - logged.mean(axis=0)) / logged.std(axis=0)
    np.testing.assert_allclose(transformed.features, standardized, atol=1e-9)


def test_zero_variance_column_is_an_error():
    dataset = Dataset(np.array([[2.0, 1.0], [2.0, 2.0], [2.0, 3.0]]), ["const", "ok"])
    with pytest.raises(ZeroVariance) as err:
        fit_transform(dataset, set())
    assert err.value.columns == ["const"]


def test_non_positive_value_rejected_at_log_step():
    dataset = Dataset(np.array([[1.0], [0.0]]), ["a"])
    with pytest.raises(NonPositive) as err:
        fit_transform(dataset, set())
    assert err.value.row == 1


def test_unknown_ph_column_rejected():
    dataset = Dataset(np.ones((2, 1)) * 2.0, ["a"])
    with pytest.raises(SchemaError):
        fit_transform(dataset, {"nope"})


def test_apply_scaler_reproduces_training_rows():
    table, _ = gen_synthetic(150, 5, 3, seed=23)
    dataset, _ = clean(table)
    transformed, scaler = fit_transform(dataset, {"f0"})
    for i in (0, 7, 149):
        out = apply_scaler(dataset.features[i], scaler)
        np.testing.assert_allclose(out, transformed.features[i], atol=1e-12)


def test_apply_scaler_on_column_means_is_zero():
    # a vector whose log step lands exactly on the stored means standardizes to 0
    dataset = Dataset(np.array([[1.0, 2.0], [4.0, 8.0]]), ["a", "b"])
    _, scaler = fit_transform(dataset, set())
    v = np.exp([c.mean for c in scaler.columns])
    np.testing.assert_allclose(apply_scaler(v, scaler), 0.0, atol=1e-12)


def test_apply_scaler_matches_independent_chain():
    table, _ = gen_synthetic(120, 4, 2, seed=24)
    dataset, _ = clean(table)
    _, scaler = fit_transform(dataset, {"f3"})
    rng = np.random.default_rng(25)
    v = rng.uniform(0.5, 9.0, size=4)
    expected = np.empty(4)
    for j, col in enumerate(scaler.columns):
        x = -v[j] * math.log(10) if col.is_ph else math.log(v[j])
        expected[j] = (x - col.mean) / col.std
    np.testing.assert_allclose(apply_scaler(v, scaler), expected, atol=1e-12)


def test_apply_scaler_dimension_mismatch():
    dataset = Dataset(np.array([[1.0], [2.0]]), ["a"])
    _, scaler = fit_transform(dataset, set())
    with pytest.raises(DimensionMismatch):
        apply_scaler(np.array([1.0, 2.0]), scaler)


# ---------------------------------------------------------------------------
# gen_synthetic
# ---------------------------------------------------------------------------


def test_gen_synthetic_is_deterministic():
    t1, l1 = gen_synthetic(10, 2, 1, seed=7)
    t2, l2 = gen_synthetic(10, 2, 1, seed=7)
    np.testing.assert_array_equal(t1.values, t2.values)
    np.testing.assert_array_equal(l1, l2)


def test_gen_synthetic_values_positive():
    table, _ = gen_synthetic(50, 3, 2, seed=1)
    assert (table.values[:, 2:] > 0).all()


def test_gen_synthetic_invalid_params():
    with pytest.raises(InvalidParams):
        gen_synthetic(3, 1, 5, seed=0)
    with pytest.raises(InvalidParams):
        gen_synthetic(10, 0, 1, seed=0)


def test_gen_synthetic_clusters_recoverable_by_kmeans():
    table, labels = gen_synthetic(100, 4, 4, seed=1)
    model = kmeans.fit(table.values[:, 2:], 4, seed=0)
    # purity: majority ground-truth label per fitted cluster
    matches = 0
    for c in range(4):
        members = labels[model.labels == c]
        if members.size:
            matches += np.bincount(members).max()
    assert matches / 100 >= 0.95


# ---------------------------------------------------------------------------
# CSV ingest
# ---------------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    table, _ = gen_synthetic(30, 3, 2, seed=2)
    path = tmp_path / "t.csv"
    write_table_csv(table, path)
    back = read_raw_csv(path)
    assert back.column_names == table.column_names
    np.testing.assert_array_equal(back.values, table.values)


def test_csv_missing_spellings(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("lon,lat,a,b\n1,2,NA,4\n5,6,nan,8\n9,10,,12\n1,2,NaN,4\n")
    table = read_raw_csv(path)
    assert np.isnan(table.values[:, 2]).all()
    assert not np.isnan(table.values[:, 3]).any()


def test_csv_bad_cell_names_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("lon,lat,a\n1,2,oops\n")
    with pytest.raises(SchemaError) as err:
        read_raw_csv(path)
    assert "column 'a'" in str(err.value) and "row 0" in str(err.value)


def test_csv_rejects_inf(tmp_path):
    path = tmp_path / "inf.csv"
    path.write_text("lon,lat,a\n1,2,inf\n")
    with pytest.raises(SchemaError):
        read_raw_csv(path)


def test_csv_requires_lon_lat_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("x,y,a\n1,2,3\n")
    with pytest.raises(SchemaError):
        read_raw_csv(path)


def test_csv_ragged_row(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("lon,lat,a\n1,2\n")
    with pytest.raises(SchemaError):
        read_raw_csv(path)


def test_dataset_from_table_rejects_missing(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("lon,lat,a\n1,2,NA\n")
    with pytest.raises(SchemaError) as err:
        dataset_from_table(read_raw_csv(path))
    assert "preprocess" in str(err.value)


def test_write_dataset_round_trips_transformed_values(tmp_path):
    table, _ = gen_synthetic(40, 3, 2, seed=5)
    dataset, _ = clean(table)
    transformed, _ = fit_transform(dataset, set())
    path = tmp_path / "d.csv"
    write_dataset_csv(transformed, path)
    back = dataset_from_table(read_raw_csv(path))
    np.testing.assert_array_equal(back.features, transformed.features)

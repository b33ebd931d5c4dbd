import numpy as np
import pytest

from ftca.data import (
    DomainDataset,
    FeatureSchema,
    apply_normalizer,
    default_schema,
    fit_normalizer,
    invert_normalizer,
    load_csv,
    split_features_labels,
    write_csv,
)
from ftca.errors import (
    DataParseError,
    MissingLabelError,
    SchemaError,
)

SCHEMA = default_schema()


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_basic(tmp_path):
    p = write_text(
        tmp_path / "d.csv",
        "CPUUTP,MEMUTP,RTT,MIR,In_RX,Out_Tx,CPU\n"
        "1,2,3,4,5,6,7\n"
        "1.5,2.5,3.5,4.5,5.5,6.5,7.5\n"
        "0,0,0,0,0,0,0\n",
    )
    ds = load_csv(p, SCHEMA)
    assert ds.n == 3
    assert ds.feature_dim == 6
    assert ds.labels.shape == (3, 1)
    assert ds.schema.label_names == ("CPU",)
    assert ds.features[0, 2] == 3.0


def test_load_csv_missing_feature_column(tmp_path):
    p = write_text(tmp_path / "d.csv", "CPUUTP,MEMUTP,MIR,In_RX,Out_Tx\n1,2,3,4,5\n")
    with pytest.raises(SchemaError, match="RTT"):
        load_csv(p, SCHEMA)


def test_load_csv_column_order_independence(tmp_path):
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(5, 7))
    names = list(SCHEMA.feature_names) + ["CPU"]
    ordered = "\n".join(
        [",".join(names)] + [",".join(repr(float(v)) for v in row) for row in rows]
    )
    perm = [3, 0, 6, 2, 5, 1, 4]
    shuffled = "\n".join(
        [",".join(names[j] for j in perm)]
        + [",".join(repr(float(row[j])) for j in perm) for row in rows]
    )
    ds1 = load_csv(write_text(tmp_path / "a.csv", ordered + "\n"), SCHEMA)
    ds2 = load_csv(write_text(tmp_path / "b.csv", shuffled + "\n"), SCHEMA)
    np.testing.assert_array_equal(ds1.features, ds2.features)
    np.testing.assert_array_equal(ds1.labels, ds2.labels)


def test_load_csv_extra_columns_warn(tmp_path):
    p = write_text(
        tmp_path / "d.csv",
        ",".join(SCHEMA.feature_names) + ",junk\n1,2,3,4,5,6,99\n",
    )
    with pytest.warns(UserWarning, match="junk"):
        ds = load_csv(p, SCHEMA)
    assert ds.labels is None


def test_load_csv_bad_cell_location(tmp_path):
    p = write_text(
        tmp_path / "d.csv",
        ",".join(SCHEMA.feature_names) + "\n1,2,3,4,5,6\n1,2,oops,4,5,6\n",
    )
    with pytest.raises(DataParseError, match="row 2.*'RTT'"):
        load_csv(p, SCHEMA)


def test_write_load_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    ds = DomainDataset(SCHEMA, rng.normal(size=(4, 6)), rng.normal(size=(4, 3)))
    write_csv(ds, tmp_path / "out.csv")
    back = load_csv(tmp_path / "out.csv", SCHEMA)
    np.testing.assert_array_equal(ds.features, back.features)
    np.testing.assert_array_equal(ds.labels, back.labels)


def make_single_column(values):
    return DomainDataset(FeatureSchema(("x",)), np.asarray(values, dtype=float)[:, None])


def test_fit_minmax():
    stats = fit_normalizer(make_single_column([0, 5, 10]), "minmax")
    col = stats.columns[0]
    assert (col.p1, col.p2) == (0.0, 10.0)
    assert not col.degenerate


def test_fit_minmax_constant_column_flagged():
    stats = fit_normalizer(make_single_column([2, 2, 2]), "minmax")
    col = stats.columns[0]
    assert col.p1 == col.p2 == 2.0
    assert col.degenerate


def test_fit_zscore_population_convention():
    stats = fit_normalizer(make_single_column([1, 3]), "zscore")
    col = stats.columns[0]
    assert col.p1 == 2.0
    assert col.p2 == 1.0  # population std, divide by n


def test_apply_minmax():
    ds = make_single_column([0, 5, 10])
    out = apply_normalizer(ds, fit_normalizer(ds, "minmax"))
    np.testing.assert_allclose(out.features[:, 0], [0.0, 0.5, 1.0])


def test_apply_does_not_clip():
    stats = fit_normalizer(make_single_column([0, 5, 10]), "minmax")
    out = stats.transform(np.array([[12.0]]))
    assert out[0, 0] == pytest.approx(1.2)


def test_degenerate_column_maps_to_zero():
    ds = make_single_column([2, 2, 2])
    for method in ("minmax", "zscore"):
        out = apply_normalizer(ds, fit_normalizer(ds, method))
        np.testing.assert_array_equal(out.features, 0.0)


def test_round_trip_inverse():
    rng = np.random.default_rng(0)
    schema = FeatureSchema(("a", "b", "c"))
    for method in ("minmax", "zscore"):
        for _ in range(20):
            ds = DomainDataset(schema, rng.normal(scale=7.0, size=(8, 3)))
            stats = fit_normalizer(ds, method)
            back = invert_normalizer(apply_normalizer(ds, stats), stats)
            np.testing.assert_allclose(back.features, ds.features, atol=1e-12)


def test_self_normalized_minmax_hits_bounds():
    rng = np.random.default_rng(5)
    ds = DomainDataset(FeatureSchema(("a", "b")), rng.normal(size=(30, 2)))
    out = apply_normalizer(ds, fit_normalizer(ds, "minmax"))
    np.testing.assert_allclose(out.features.min(axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(out.features.max(axis=0), 1.0, atol=1e-15)


def test_apply_column_mismatch():
    ds = make_single_column([1, 2])
    other = DomainDataset(FeatureSchema(("y",)), np.zeros((2, 1)))
    with pytest.raises(SchemaError):
        apply_normalizer(other, fit_normalizer(ds))


def test_split_features_labels():
    rng = np.random.default_rng(1)
    schema = FeatureSchema(("a", "b"), ("CPU", "MEM_MB"))
    ds = DomainDataset(schema, rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
    X, Y = split_features_labels(ds, ["CPU"])
    assert Y.shape == (5, 1)
    np.testing.assert_array_equal(Y[:, 0], ds.labels[:, 0])
    with pytest.raises(MissingLabelError):
        split_features_labels(ds, ["LINK_Mbps"])
    X, Y = split_features_labels(ds, [])
    assert Y.shape == (5, 0)
    np.testing.assert_array_equal(X, ds.features)


def test_schema_validation():
    with pytest.raises(SchemaError):
        FeatureSchema(())
    with pytest.raises(SchemaError):
        FeatureSchema(("a", "a"))
    with pytest.raises(SchemaError):
        FeatureSchema(("a",), ("a",))
    with pytest.raises(SchemaError):
        FeatureSchema(("a b",))


def test_dataset_immutable():
    ds = make_single_column([1, 2])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 9.0

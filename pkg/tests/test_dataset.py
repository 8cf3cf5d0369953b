import csv

import pytest

from driverid.base import (
    MISSING,
    ConfigError,
    DataError,
    EmptyDatasetError,
    FeatureKind,
    SchemaError,
)
from driverid.dataset import (
    Dataset,
    FeatureDescriptor,
    IngestConfig,
    Interaction,
    decompose_timestamp,
    exclude_sparse_drivers,
    label_for_owner,
    parse_csv,
    split_folds,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


BASIC_CSV = "speed,rpm,driver\n50,2000,A\n51,2100,A\n60,2500,B\n"


@pytest.fixture
def basic(tmp_path):
    data = write(tmp_path, "d.csv", BASIC_CSV)
    cfg = write(tmp_path, "i.cfg", "label_column = driver\n")
    return parse_csv(data, IngestConfig.from_file(cfg))


def test_parse_basic_shape(basic):
    assert len(basic) == 3
    assert basic.feature_names == ("speed", "rpm")
    assert [i.driver_id for i in basic.instances] == ["A", "A", "B"]
    assert basic.instances[0].values == (50.0, 2000.0)


def test_parse_unparseable_numeric_becomes_missing(tmp_path):
    data = write(tmp_path, "d.csv", "speed,driver\nabc,A\n50,B\n")
    ds = parse_csv(data, IngestConfig(label_column="driver"))
    assert ds.instances[0].values == (MISSING,)
    assert len(ds) == 2  # row retained


def test_parse_non_finite_becomes_missing(tmp_path):
    data = write(tmp_path, "d.csv", "speed,driver\ninf,A\nnan,B\n1,A\n")
    ds = parse_csv(data, IngestConfig(label_column="driver"))
    assert ds.instances[0].values == (MISSING,)
    assert ds.instances[1].values == (MISSING,)


def test_parse_missing_file_raises_io():
    with pytest.raises(FileNotFoundError):
        parse_csv("/nonexistent/file.csv", IngestConfig(label_column="driver"))


def test_parse_label_column_absent(tmp_path):
    data = write(tmp_path, "d.csv", "speed,rpm\n1,2\n")
    with pytest.raises(SchemaError):
        parse_csv(data, IngestConfig(label_column="driver"))


def test_parse_zero_rows(tmp_path):
    data = write(tmp_path, "d.csv", "speed,driver\n")
    with pytest.raises(EmptyDatasetError):
        parse_csv(data, IngestConfig(label_column="driver"))


def test_parse_excluded_and_categorical(tmp_path):
    data = write(tmp_path, "d.csv", "speed,model,gear,driver\n10,X5,low,A\n20,X3,high,B\n")
    cfg = IngestConfig(label_column="driver", exclude_columns=("model",),
                       categorical_columns=("gear",))
    ds = parse_csv(data, cfg)
    assert ds.feature_names == ("speed", "gear")
    assert ds.feature("gear").kind is FeatureKind.CATEGORICAL
    assert ds.instances[0].values == (10.0, "low")


def test_ingest_config_requires_timestamp_format():
    with pytest.raises(ConfigError):
        IngestConfig(label_column="driver", timestamp_column="ts")


def test_ingest_config_unknown_key(tmp_path):
    cfg = write(tmp_path, "i.cfg", "label_column = driver\nbogus = 1\n")
    with pytest.raises(ConfigError):
        IngestConfig.from_file(cfg)


def test_csv_round_trip_preserves_text(tmp_path):
    text = ("speed,ts,driver\n"
            "1.50,2019-03-15 19:00:00,A\n"
            ",2019-03-16 07:12:01,B\n"
            "0077,2019-03-17 08:00:59,A\n")
    data = write(tmp_path, "d.csv", text)
    cfg = IngestConfig(label_column="driver", timestamp_column="ts",
                       timestamp_format="%Y-%m-%d %H:%M:%S")
    ds = parse_csv(data, cfg)
    out = tmp_path / "out.csv"
    ds.to_csv(out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    s = header.index("speed")
    t = header.index("ts")
    d = header.index("driver")
    assert [r[s] for r in rows[1:]] == ["1.50", "", "0077"]
    assert [r[t] for r in rows[1:]] == ["2019-03-15 19:00:00",
                                        "2019-03-16 07:12:01",
                                        "2019-03-17 08:00:59"]
    assert [r[d] for r in rows[1:]] == ["A", "B", "A"]


# --- timestamp decomposition -------------------------------------------------

def make_ts_dataset(tmp_path, rows):
    body = "".join(f"{speed},{ts},{driver}\n" for speed, ts, driver in rows)
    data = write(tmp_path, "ts.csv", "speed,ts,driver\n" + body)
    cfg = IngestConfig(label_column="driver", timestamp_column="ts",
                       timestamp_format="%Y-%m-%d %H:%M:%S")
    return parse_csv(data, cfg)


def test_decompose_epoch_instant(tmp_path):
    ds = make_ts_dataset(tmp_path, [(1, "1970-01-01 00:00:00", "A")])
    out = decompose_timestamp(ds)
    inst = out.instances[0]
    by = dict(zip(out.feature_names, inst.values))
    assert by["second"] == 0 and by["minute"] == 0 and by["hour"] == 0
    assert by["day"] == 1 and by["month"] == 1 and by["year"] == 1970
    assert by["day_of_week"] == 4  # Thursday


def test_decompose_friday_evening(tmp_path):
    ds = make_ts_dataset(tmp_path, [(1, "2019-03-15 19:00:00", "A")])
    by = dict(zip(decompose_timestamp(ds).feature_names,
                  decompose_timestamp(ds).instances[0].values))
    assert by["hour"] == 19
    assert by["day_of_week"] == 5  # Friday


def test_decompose_appends_only(tmp_path):
    ds = make_ts_dataset(tmp_path, [(7, "2019-03-15 19:00:00", "A")])
    out = decompose_timestamp(ds)
    assert out.feature_names[:1] == ("speed",)
    assert out.instances[0].values[0] == 7.0
    assert all(out.feature(n).timestamp_correlated
               for n in ("second", "minute", "hour", "day_of_week", "day", "month", "year"))
    assert not out.feature("speed").timestamp_correlated


def test_decompose_engine_runtime_clock(tmp_path):
    data = write(tmp_path, "d.csv", "speed,rt,driver\n1,01:23:45,A\n2,00:05:09,B\n")
    cfg = IngestConfig(label_column="driver", engine_runtime_column="rt",
                       engine_runtime_format="clock")
    out = decompose_timestamp(parse_csv(data, cfg))
    assert out.feature_names == ("speed", "engine_runtime_minute")
    assert out.instances[0].values[1] == 23
    assert out.instances[1].values[1] == 5
    assert out.feature("engine_runtime_minute").timestamp_correlated


def test_decompose_engine_runtime_minutes_and_seconds(tmp_path):
    data = write(tmp_path, "d.csv", "speed,rt,driver\n1,95,A\n2,30,B\n")
    cfg = IngestConfig(label_column="driver", engine_runtime_column="rt",
                       engine_runtime_format="minutes")
    out = decompose_timestamp(parse_csv(data, cfg))
    assert out.instances[0].values[1] == 95
    cfg2 = IngestConfig(label_column="driver", engine_runtime_column="rt",
                        engine_runtime_format="seconds")
    out2 = decompose_timestamp(parse_csv(data, cfg2))
    assert out2.instances[0].values[1] == 1


def test_decompose_without_time_source_raises(basic):
    with pytest.raises(DataError):
        decompose_timestamp(basic)


def test_decompose_name_clash(tmp_path):
    data = write(tmp_path, "d.csv", "hour,ts,driver\n1,2019-03-15 19:00:00,A\n")
    cfg = IngestConfig(label_column="driver", timestamp_column="ts",
                       timestamp_format="%Y-%m-%d %H:%M:%S")
    with pytest.raises(SchemaError):
        decompose_timestamp(parse_csv(data, cfg))


# --- owner labeling ----------------------------------------------------------

def test_label_for_owner(basic):
    out = label_for_owner(basic, "A")
    assert [i.driver_id for i in out.instances] == ["1", "1", "0"]
    out_b = label_for_owner(basic, "B")
    assert [i.driver_id for i in out_b.instances] == ["0", "0", "1"]
    # predictors untouched, count and order preserved
    assert [i.values for i in out.instances] == [i.values for i in basic.instances]


def test_label_for_owner_unknown(basic):
    with pytest.raises(DataError):
        label_for_owner(basic, "nobody")


# --- sparse-driver exclusion ---------------------------------------------------

def make_driver_dataset(counts):
    schema = [FeatureDescriptor("x", FeatureKind.NUMERIC, False, 0)]
    instances = []
    for driver, n in counts.items():
        for i in range(n):
            instances.append(Interaction((float(i),), driver))
    return Dataset(schema, instances, "driver")


def test_exclude_sparse_drivers():
    ds = make_driver_dataset({"A": 5, "B": 7, "C": 2})
    out, report = exclude_sparse_drivers(ds, 5)
    assert set(out.class_values) == {"A", "B"}
    assert report.excluded == (("C", 2),)
    assert len(out) == 12


def test_exclude_sparse_identity_at_one():
    ds = make_driver_dataset({"A": 3, "B": 2})
    out, report = exclude_sparse_drivers(ds, 1)
    assert out is ds
    assert report.excluded == ()


def test_exclude_sparse_too_few_remaining():
    ds = make_driver_dataset({"A": 5, "B": 5})
    with pytest.raises(DataError):
        exclude_sparse_drivers(ds, 6)


# --- fold splitting --------------------------------------------------------------

def test_split_folds_exact_sizes():
    ds = make_driver_dataset({"A": 50, "B": 50})
    pairs = split_folds(ds, 10, seed=1)
    assert [len(test) for _, test in pairs] == [10] * 10


def test_split_folds_balanced_remainder():
    ds = make_driver_dataset({"A": 95})
    # single class is fine for splitting; only training needs 2
    pairs = split_folds(ds, 10, seed=1)
    sizes = [len(test) for _, test in pairs]
    assert sorted(sizes, reverse=True) == [10] * 5 + [9] * 5
    assert sizes == sorted(sizes, reverse=True)  # larger folds come first


def test_split_folds_deterministic():
    ds = make_driver_dataset({"A": 30, "B": 20})
    p1 = split_folds(ds, 5, seed=42)
    p2 = split_folds(ds, 5, seed=42)
    for (_, t1), (_, t2) in zip(p1, p2):
        assert [id(i) for i in t1.instances] == [id(i) for i in t2.instances]


def test_split_folds_disjoint_union():
    ds = make_driver_dataset({"A": 23, "B": 10})
    pairs = split_folds(ds, 4, seed=3)
    all_test = []
    for train, test in pairs:
        test_ids = {id(i) for i in test.instances}
        train_ids = {id(i) for i in train.instances}
        assert not test_ids & train_ids
        assert len(test_ids | train_ids) == len(ds)
        all_test.extend(test_ids)
    assert len(all_test) == len(set(all_test)) == len(ds)


def test_split_folds_stratified_balances_classes():
    ds = make_driver_dataset({"A": 40, "B": 10})
    pairs = split_folds(ds, 5, seed=2, stratified=True)
    for _, test in pairs:
        counts = {}
        for i in test.instances:
            counts[i.driver_id] = counts.get(i.driver_id, 0) + 1
        assert counts.get("A", 0) == 8
        assert counts.get("B", 0) == 2


def test_split_folds_errors():
    ds = make_driver_dataset({"A": 3})
    with pytest.raises(ConfigError):
        split_folds(ds, 1, seed=0)
    with pytest.raises(DataError):
        split_folds(ds, 4, seed=0)

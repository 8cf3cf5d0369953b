"""Datasets of driver interactions: CSV ingestion, timestamp decomposition,
owner labeling, sparse-driver exclusion, and fold splitting.

A dataset is immutable after construction; operations return new datasets
that share instance objects wherever rows are only re-grouped.
"""

from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass, replace
from datetime import datetime
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .base import (
    MISSING,
    ConfigError,
    DataError,
    EmptyDatasetError,
    FeatureKind,
    SchemaError,
)

TIMESTAMP_FEATURES = ("second", "minute", "hour", "day_of_week", "day", "month", "year")
ENGINE_RUNTIME_FEATURE = "engine_runtime_minute"


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: FeatureKind
    timestamp_correlated: bool = False
    index: int = 0


@dataclass(frozen=True, slots=True)
class Interaction:
    """One timestamped sensor record with a driver label.

    ``values`` holds one entry per schema feature: a float, a category
    token, or MISSING.  ``raw`` preserves the original cell text for
    bit-exact CSV re-emission.
    """

    values: tuple
    driver_id: str
    timestamp: datetime | None = None
    raw: tuple | None = None
    timestamp_raw: str | None = None
    engine_runtime: str | None = None


class Dataset:
    """Schema plus instances, with the label column held out of the schema."""

    def __init__(self, schema: Sequence[FeatureDescriptor], instances: Iterable[Interaction],
                 class_feature: str, timestamp_name: str | None = None,
                 engine_runtime_name: str | None = None, engine_runtime_format: str = "clock"):
        self.schema = tuple(schema)
        self.instances = tuple(instances)
        self.class_feature = class_feature
        self.timestamp_name = timestamp_name
        self.engine_runtime_name = engine_runtime_name
        self.engine_runtime_format = engine_runtime_format
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")
        if class_feature in names:
            raise SchemaError("label column cannot also be a predictor")
        n = len(self.schema)
        for inst in self.instances:
            if len(inst.values) != n:
                raise SchemaError(
                    f"instance has {len(inst.values)} values, schema has {n}")

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def feature_names(self) -> tuple:
        return tuple(f.name for f in self.schema)

    @cached_property
    def class_values(self) -> tuple:
        """Distinct labels in first-seen order."""
        seen: dict = {}
        for inst in self.instances:
            if inst.driver_id not in seen:
                seen[inst.driver_id] = None
        return tuple(seen)

    @cached_property
    def class_counts(self) -> dict:
        counts: dict = {}
        for inst in self.instances:
            counts[inst.driver_id] = counts.get(inst.driver_id, 0) + 1
        return counts

    def feature(self, name: str) -> FeatureDescriptor:
        for f in self.schema:
            if f.name == name:
                return f
        raise SchemaError(f"unknown feature {name!r}")

    def subset(self, indices: Iterable[int]) -> "Dataset":
        """New dataset restricted to the given row indices (instances shared)."""
        inst = self.instances
        return Dataset([replace(f, index=i) for i, f in enumerate(self.schema)],
                       [inst[i] for i in indices], self.class_feature,
                       self.timestamp_name, self.engine_runtime_name,
                       self.engine_runtime_format)

    def project(self, names: Sequence[str]) -> "Dataset":
        """New dataset keeping only the named predictors, in schema order."""
        wanted = set(names)
        missing = wanted - set(self.feature_names)
        if missing:
            raise SchemaError(f"unknown features: {sorted(missing)}")
        keep = [f for f in self.schema if f.name in wanted]
        positions = [f.index for f in keep]
        schema = [replace(f, index=i) for i, f in enumerate(keep)]
        instances = [
            replace(inst,
                    values=tuple(inst.values[p] for p in positions),
                    raw=tuple(inst.raw[p] for p in positions) if inst.raw else None)
            for inst in self.instances
        ]
        return Dataset(schema, instances, self.class_feature,
                       self.timestamp_name, self.engine_runtime_name,
                       self.engine_runtime_format)

    @cached_property
    def digest(self) -> str:
        """Content hash covering schema, labels, and all cell values."""
        h = hashlib.sha256()
        h.update(self.class_feature.encode())
        for f in self.schema:
            h.update(f"\x1f{f.name}\x1e{f.kind.value}\x1e{f.timestamp_correlated}".encode())
        for inst in self.instances:
            h.update(b"\x1d")
            h.update(inst.driver_id.encode())
            if inst.timestamp is not None:
                h.update(inst.timestamp.isoformat().encode())
            for v in inst.values:
                h.update(b"\x1f")
                if v is not MISSING:
                    h.update(str(v).encode())
        return h.hexdigest()

    def to_csv(self, path) -> None:
        """Re-emit as CSV; original cell text is preserved where known."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = list(self.feature_names)
            if self.engine_runtime_name:
                header.append(self.engine_runtime_name)
            if self.timestamp_name:
                header.append(self.timestamp_name)
            header.append(self.class_feature)
            writer.writerow(header)
            for inst in self.instances:
                row = []
                for i, v in enumerate(inst.values):
                    if inst.raw is not None and inst.raw[i] is not None:
                        row.append(inst.raw[i])
                    elif v is MISSING:
                        row.append("")
                    else:
                        row.append(str(v))
                if self.engine_runtime_name:
                    row.append(inst.engine_runtime if inst.engine_runtime is not None else "")
                if self.timestamp_name:
                    if inst.timestamp_raw is not None:
                        row.append(inst.timestamp_raw)
                    elif inst.timestamp is not None:
                        row.append(inst.timestamp.isoformat(sep=" "))
                    else:
                        row.append("")
                row.append(inst.driver_id)
                writer.writerow(row)


@dataclass(frozen=True)
class IngestConfig:
    """Declares how to read a trip-log CSV.

    Plain key-value text file, one ``key = value`` per line, ``#`` comments,
    comma-separated lists.  Keys: label_column (required), timestamp_column,
    timestamp_format (strptime, required with timestamp_column),
    engine_runtime_column, engine_runtime_format (clock | minutes | seconds),
    exclude_columns, categorical_columns, timestamp_correlated_columns.
    """

    label_column: str
    timestamp_column: str | None = None
    timestamp_format: str | None = None
    engine_runtime_column: str | None = None
    engine_runtime_format: str = "clock"
    exclude_columns: tuple = ()
    categorical_columns: tuple = ()
    timestamp_correlated_columns: tuple = ()

    def __post_init__(self):
        if not self.label_column:
            raise ConfigError("label_column is required")
        if self.timestamp_column and not self.timestamp_format:
            raise ConfigError("timestamp_format is required when timestamp_column is set")
        if self.engine_runtime_format not in ("clock", "minutes", "seconds"):
            raise ConfigError(
                f"engine_runtime_format must be clock, minutes or seconds,"
                f" got {self.engine_runtime_format!r}")

    @classmethod
    def from_file(cls, path) -> "IngestConfig":
        kv = read_kv_config(path)
        known = {
            "label_column", "timestamp_column", "timestamp_format",
            "engine_runtime_column", "engine_runtime_format",
            "exclude_columns", "categorical_columns", "timestamp_correlated_columns",
        }
        unknown = set(kv) - known
        if unknown:
            raise ConfigError(f"unknown ingestion keys: {sorted(unknown)}")
        if "label_column" not in kv:
            raise ConfigError(f"{path}: label_column is required")
        lists = {}
        for key in ("exclude_columns", "categorical_columns", "timestamp_correlated_columns"):
            if key in kv:
                lists[key] = tuple(s.strip() for s in kv[key].split(",") if s.strip())
        return cls(
            label_column=kv["label_column"],
            timestamp_column=kv.get("timestamp_column"),
            timestamp_format=kv.get("timestamp_format"),
            engine_runtime_column=kv.get("engine_runtime_column"),
            engine_runtime_format=kv.get("engine_runtime_format", "clock"),
            **lists,
        )


def read_kv_config(path) -> dict:
    """Parse a plain ``key = value`` text file."""
    out: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_csv(path, config: IngestConfig, require_label: bool = True) -> Dataset:
    """Read a trip-log CSV into a Dataset.

    Cells that fail numeric parsing (or parse to non-finite values) become
    MISSING; rows are always retained and row order is preserved.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: no header row") from None
        header = [h.strip() for h in header]
        col_of = {name: i for i, name in enumerate(header)}

        label_idx = col_of.get(config.label_column)
        if label_idx is None and require_label:
            raise SchemaError(f"{path}: label column {config.label_column!r} not in header")
        ts_idx = None
        if config.timestamp_column:
            ts_idx = col_of.get(config.timestamp_column)
            if ts_idx is None:
                raise SchemaError(
                    f"{path}: timestamp column {config.timestamp_column!r} not in header")
        rt_idx = None
        if config.engine_runtime_column:
            rt_idx = col_of.get(config.engine_runtime_column)
            if rt_idx is None:
                raise SchemaError(
                    f"{path}: engine_runtime column {config.engine_runtime_column!r}"
                    " not in header")

        special = {label_idx, ts_idx, rt_idx}
        excluded = set(config.exclude_columns)
        categorical = set(config.categorical_columns)
        ts_correlated = set(config.timestamp_correlated_columns)
        schema = []
        positions = []
        for i, name in enumerate(header):
            if i in special or name in excluded:
                continue
            kind = FeatureKind.CATEGORICAL if name in categorical else FeatureKind.NUMERIC
            schema.append(FeatureDescriptor(name, kind, name in ts_correlated, len(schema)))
            positions.append(i)

        instances = []
        for row in reader:
            if not row:
                continue
            values = []
            raw = []
            for p, feat in zip(positions, schema):
                cell = row[p] if p < len(row) else ""
                raw.append(cell)
                values.append(_parse_cell(cell, feat.kind))
            ts = None
            ts_raw = None
            if ts_idx is not None and ts_idx < len(row):
                ts_raw = row[ts_idx]
                ts = _parse_timestamp(ts_raw, config.timestamp_format)
            runtime = None
            if rt_idx is not None and rt_idx < len(row):
                runtime = row[rt_idx]
            label = row[label_idx] if (label_idx is not None and label_idx < len(row)) else ""
            instances.append(Interaction(tuple(values), label, ts, tuple(raw), ts_raw, runtime))

    if not instances:
        raise EmptyDatasetError(f"{path}: no data rows")
    return Dataset(schema, instances, config.label_column,
                   config.timestamp_column, config.engine_runtime_column,
                   config.engine_runtime_format)


def _parse_cell(cell: str, kind: FeatureKind):
    cell = cell.strip()
    if cell == "":
        return MISSING
    if kind is FeatureKind.CATEGORICAL:
        return cell
    try:
        v = float(cell)
    except ValueError:
        return MISSING
    if v != v or v in (float("inf"), float("-inf")):
        return MISSING
    return v


def _parse_timestamp(text: str, fmt: str | None) -> datetime | None:
    if not text or not fmt:
        return None
    try:
        return datetime.strptime(text.strip(), fmt)
    except ValueError:
        return None


def decompose_timestamp(dataset: Dataset) -> Dataset:
    """Append numeric calendar features derived from each instance's timestamp.

    Appends second, minute, hour, day_of_week (Monday=1), day, month, year
    when the dataset carries timestamps, and engine_runtime_minute when an
    engine-runtime column is present.  Existing columns are never modified.
    """
    has_ts = dataset.timestamp_name is not None
    has_rt = dataset.engine_runtime_name is not None
    if not has_ts and not has_rt:
        raise DataError("dataset has neither a timestamp nor an engine_runtime column")

    new_names = list(TIMESTAMP_FEATURES) if has_ts else []
    if has_rt:
        new_names.append(ENGINE_RUNTIME_FEATURE)
    clash = set(new_names) & set(dataset.feature_names)
    if clash:
        raise SchemaError(
            f"decomposition would collide with existing columns: {sorted(clash)};"
            " exclude or rename them in the ingestion config")

    rt_format = dataset.engine_runtime_format
    schema = list(dataset.schema)
    base = len(schema)
    for off, name in enumerate(new_names):
        schema.append(FeatureDescriptor(name, FeatureKind.NUMERIC, True, base + off))

    instances = []
    for inst in dataset.instances:
        extra = []
        if has_ts:
            ts = inst.timestamp
            if ts is None:
                extra.extend([MISSING] * 7)
            else:
                extra.extend([ts.second, ts.minute, ts.hour, ts.isoweekday(),
                              ts.day, ts.month, ts.year])
        if has_rt:
            extra.append(_runtime_minute(inst.engine_runtime, rt_format))
        raw = inst.raw if inst.raw is not None else (None,) * base
        new_raw = raw + tuple("" if v is MISSING else str(v) for v in extra)
        instances.append(replace(inst, values=inst.values + tuple(extra), raw=new_raw))
    return Dataset(schema, instances, dataset.class_feature,
                   dataset.timestamp_name, dataset.engine_runtime_name,
                   dataset.engine_runtime_format)


def _runtime_minute(text: str | None, fmt: str):
    if text is None or text.strip() == "":
        return MISSING
    text = text.strip()
    if fmt == "clock":
        parts = text.split(":")
        if len(parts) < 2:
            return MISSING
        try:
            return int(parts[-2])
        except ValueError:
            return MISSING
    try:
        v = float(text)
    except ValueError:
        return MISSING
    if v != v:
        return MISSING
    return int(v // 60) if fmt == "seconds" else int(v)


def label_for_owner(dataset: Dataset, owner: str) -> Dataset:
    """Relabel for owner identification: 1 for the owner's rows, 0 otherwise."""
    if owner not in dataset.class_counts:
        raise DataError(f"unknown driver id {owner!r}")
    instances = [replace(inst, driver_id="1" if inst.driver_id == owner else "0")
                 for inst in dataset.instances]
    return Dataset(dataset.schema, instances, dataset.class_feature,
                   dataset.timestamp_name, dataset.engine_runtime_name,
                   dataset.engine_runtime_format)


@dataclass(frozen=True)
class ExclusionReport:
    min_instances: int
    excluded: tuple
    retained: tuple

    def to_text(self) -> str:
        lines = [f"sparse-driver exclusion (minimum {self.min_instances} rows)"]
        for driver, count in self.excluded:
            lines.append(f"excluded {driver}: {count} rows")
        if not self.excluded:
            lines.append("no drivers excluded")
        for driver, count in self.retained:
            lines.append(f"retained {driver}: {count} rows")
        return "\n".join(lines) + "\n"


def exclude_sparse_drivers(dataset: Dataset, min_instances: int = 100):
    """Drop every driver with fewer than ``min_instances`` rows.

    Returns ``(dataset, report)``.  Raises when fewer than two drivers
    would remain.
    """
    if min_instances < 1:
        raise ConfigError("min_instances must be >= 1")
    counts = dataset.class_counts
    excluded = tuple((d, c) for d, c in counts.items() if c < min_instances)
    retained = tuple((d, c) for d, c in counts.items() if c >= min_instances)
    if len(retained) < 2:
        raise DataError(
            f"exclusion at min_instances={min_instances} leaves {len(retained)} driver(s)")
    report = ExclusionReport(min_instances, excluded, retained)
    if not excluded:
        return dataset, report
    dropped = {d for d, _ in excluded}
    keep = [i for i, inst in enumerate(dataset.instances) if inst.driver_id not in dropped]
    return dataset.subset(keep), report


def split_folds(dataset: Dataset, k: int, seed: int, stratified: bool = False):
    """Random k-fold partition: list of (training, test) dataset pairs.

    Every instance lands in exactly one test fold; fold sizes differ by at
    most one (the first ``n % k`` folds are larger).  Deterministic per seed.
    """
    if k < 2:
        raise ConfigError("fold count must be >= 2")
    n = len(dataset)
    if k > n:
        raise DataError(f"fold count {k} exceeds instance count {n}")
    rng = random.Random(seed)
    folds: list = [[] for _ in range(k)]
    if stratified:
        by_class: dict = {c: [] for c in dataset.class_values}
        for i, inst in enumerate(dataset.instances):
            by_class[inst.driver_id].append(i)
        pos = 0
        for c in dataset.class_values:
            idxs = by_class[c]
            rng.shuffle(idxs)
            for i in idxs:
                folds[pos % k].append(i)
                pos += 1
    else:
        order = list(range(n))
        rng.shuffle(order)
        for f in range(k):
            folds[f] = order[f::k]

    pairs = []
    for f in range(k):
        test = sorted(folds[f])
        test_set = set(test)
        train = [i for i in range(n) if i not in test_set]
        pairs.append((dataset.subset(train), dataset.subset(test)))
    return pairs

"""Dataset representation, CSV ingestion, and per-column normalization.

Feature matrices are float64 arrays with one sample per row. Columns are
always addressed through a FeatureSchema so that data loaded from shuffled
CSV files ends up in a canonical order.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataParseError, DomainError, MissingLabelError, SchemaError

# Column names of the VNF profiling datasets this package ships presets for.
DEFAULT_FEATURES = ("CPUUTP", "MEMUTP", "RTT", "MIR", "In_RX", "Out_Tx")
DEFAULT_LABELS = ("CPU", "MEM_MB", "LINK_Mbps")

MINMAX = "minmax"
ZSCORE = "zscore"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature and label column names; the two lists are disjoint."""

    feature_names: tuple[str, ...]
    label_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "label_names", tuple(self.label_names))
        if not self.feature_names:
            raise SchemaError("schema needs at least one feature column")
        names = self.feature_names + self.label_names
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in schema: {names}")
        for name in names:
            if not name or any(ch.isspace() for ch in name) or "," in name:
                raise SchemaError(f"invalid column name {name!r}")

    @property
    def all_names(self) -> tuple[str, ...]:
        return self.feature_names + self.label_names

    def with_labels(self, labels: tuple[str, ...]) -> "FeatureSchema":
        return FeatureSchema(self.feature_names, labels)


def default_schema() -> FeatureSchema:
    return FeatureSchema(DEFAULT_FEATURES, DEFAULT_LABELS)


@dataclass(frozen=True)
class DomainDataset:
    """A feature matrix with optional label columns, tied to a schema."""

    schema: FeatureSchema
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 2:
            raise DomainError("features must be a 2-D matrix")
        if feats.shape[0] < 1:
            raise DomainError("dataset needs at least one row")
        if feats.shape[1] != len(self.schema.feature_names):
            raise SchemaError(
                f"feature matrix has {feats.shape[1]} columns, "
                f"schema names {len(self.schema.feature_names)}"
            )
        feats = feats.copy()
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=float)
            if labels.ndim != 2:
                raise DomainError("labels must be a 2-D matrix")
            if labels.shape[0] != feats.shape[0]:
                raise DomainError("label row count does not match features")
            if labels.shape[1] != len(self.schema.label_names):
                raise SchemaError(
                    f"label matrix has {labels.shape[1]} columns, "
                    f"schema names {len(self.schema.label_names)}"
                )
            labels = labels.copy()
            labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def label_column(self, name: str) -> np.ndarray:
        if self.labels is None or name not in self.schema.label_names:
            raise MissingLabelError(f"label {name!r} not present in dataset")
        return self.labels[:, self.schema.label_names.index(name)]

    def all_columns(self) -> np.ndarray:
        """Features and labels side by side, in schema order."""
        if self.labels is None:
            return self.features
        return np.hstack([self.features, self.labels])


@dataclass(frozen=True)
class ColumnStats:
    name: str
    method: str  # MINMAX or ZSCORE
    p1: float    # min or mean
    p2: float    # max or std
    degenerate: bool


@dataclass(frozen=True)
class NormalizationStats:
    """Per-column normalization parameters, keyed by column name."""

    columns: tuple[ColumnStats, ...] = field(default_factory=tuple)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Normalize a raw matrix whose columns match this stats object.

        Min-max maps in-range values into [0, 1] and does NOT clip values
        outside the fitted range; degenerate columns map to 0.
        """
        X = _check_matrix(X, len(self.columns))
        out = np.empty_like(X)
        for j, col in enumerate(self.columns):
            if col.degenerate:
                out[:, j] = 0.0
            elif col.method == MINMAX:
                out[:, j] = (X[:, j] - col.p1) / (col.p2 - col.p1)
            else:
                out[:, j] = (X[:, j] - col.p1) / col.p2
        return out

    def inverse(self, X: np.ndarray) -> np.ndarray:
        """Map normalized values back to the original scale."""
        X = _check_matrix(X, len(self.columns))
        out = np.empty_like(X)
        for j, col in enumerate(self.columns):
            if col.degenerate:
                out[:, j] = col.p1
            elif col.method == MINMAX:
                out[:, j] = X[:, j] * (col.p2 - col.p1) + col.p1
            else:
                out[:, j] = X[:, j] * col.p2 + col.p1
        return out


def _check_matrix(X: np.ndarray, width: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != width:
        raise SchemaError(f"expected a matrix with {width} columns, got shape {X.shape}")
    return X


def fit_column_stats(X: np.ndarray, names: tuple[str, ...], method: str = MINMAX) -> NormalizationStats:
    """Fit per-column stats on an arbitrary matrix (used on feature or joint matrices)."""
    if method not in (MINMAX, ZSCORE):
        raise ConfigError(f"unknown normalization method {method!r}")
    X = _check_matrix(X, len(names))
    if X.shape[0] < 1:
        raise DomainError("cannot fit a normalizer on an empty matrix")
    cols = []
    for j, name in enumerate(names):
        v = X[:, j]
        if method == MINMAX:
            lo, hi = float(np.min(v)), float(np.max(v))
            cols.append(ColumnStats(name, MINMAX, lo, hi, degenerate=hi <= lo))
        else:
            mean = float(np.mean(v))
            std = float(np.std(v))  # population convention, divide by n
            cols.append(ColumnStats(name, ZSCORE, mean, std, degenerate=std == 0.0))
    return NormalizationStats(tuple(cols))


def fit_normalizer(ds: DomainDataset, method: str = MINMAX) -> NormalizationStats:
    """Fit normalization stats over the feature columns of a dataset."""
    return fit_column_stats(ds.features, ds.schema.feature_names, method)


def apply_normalizer(ds: DomainDataset, stats: NormalizationStats) -> DomainDataset:
    """Return a dataset with normalized features; labels are untouched."""
    if stats.names != ds.schema.feature_names:
        raise SchemaError(
            f"normalizer columns {stats.names} do not match dataset features "
            f"{ds.schema.feature_names}"
        )
    return DomainDataset(ds.schema, stats.transform(ds.features), ds.labels)


def invert_normalizer(ds: DomainDataset, stats: NormalizationStats) -> DomainDataset:
    """Inverse of apply_normalizer for non-degenerate columns."""
    if stats.names != ds.schema.feature_names:
        raise SchemaError("normalizer columns do not match dataset features")
    return DomainDataset(ds.schema, stats.inverse(ds.features), ds.labels)


def split_features_labels(ds: DomainDataset, wanted_labels: list[str] | tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Return (X, Y) where Y holds the wanted label columns in the given order."""
    for name in wanted_labels:
        if name not in ds.schema.label_names:
            raise MissingLabelError(f"label {name!r} not in dataset labels {ds.schema.label_names}")
    if not wanted_labels:
        return ds.features, np.empty((ds.n, 0))
    cols = [ds.schema.label_names.index(name) for name in wanted_labels]
    assert ds.labels is not None
    return ds.features, ds.labels[:, cols]


def load_csv(path: str | Path, schema: FeatureSchema) -> DomainDataset:
    """Load a comma-separated file with a header row into a DomainDataset.

    All schema feature columns must be present; schema label columns are
    optional and the returned dataset's schema lists only the ones found.
    Extra columns are ignored with a warning. Column order in the file is
    irrelevant: output columns always follow schema order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = list(reader)

    counts = {name: header.count(name) for name in schema.all_names}
    for name in schema.feature_names:
        if counts[name] == 0:
            raise SchemaError(f"missing column {name!r} in {path}")
    for name, c in counts.items():
        if c > 1:
            raise SchemaError(f"duplicate column {name!r} in {path}")
    present_labels = tuple(n for n in schema.label_names if counts[n] == 1)
    used = set(schema.feature_names) | set(present_labels)
    extra = [h for h in header if h not in used]
    if extra:
        warnings.warn(f"{path}: ignoring columns {extra}", stacklevel=2)

    if not rows:
        raise DomainError(f"{path}: no data rows")

    def parse_cell(text: str, row: int, col: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise DataParseError(
                f"{path}: row {row}, column {col!r}: cannot parse {text!r}"
            ) from None

    index = {name: header.index(name) for name in used}
    feats = np.empty((len(rows), len(schema.feature_names)))
    labels = np.empty((len(rows), len(present_labels))) if present_labels else None
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataParseError(f"{path}: row {i + 1} has {len(row)} cells, header has {len(header)}")
        for j, name in enumerate(schema.feature_names):
            feats[i, j] = parse_cell(row[index[name]], i + 1, name)
        for j, name in enumerate(present_labels):
            labels[i, j] = parse_cell(row[index[name]], i + 1, name)

    return DomainDataset(FeatureSchema(schema.feature_names, present_labels), feats, labels)


def write_csv(ds: DomainDataset, path: str | Path) -> None:
    """Write features and labels with full float precision (round-trip exact)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.schema.all_names)
        for row in ds.all_columns():
            writer.writerow([repr(float(v)) for v in row])

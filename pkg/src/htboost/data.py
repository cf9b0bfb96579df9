"""CSV ingestion, categorical encoding, feature binning and fold plans."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

KIND_NUMERIC = "numeric"
KIND_ONE_HOT = "one_hot"

DEFAULT_MAX_BINS = 256
DEFAULT_ONE_HOT_LEVELS = 32


class DataError(ValueError):
    """Raised when a dataset cannot be built from its inputs."""


@dataclass
class IngestSummary:
    """What ingestion kept, encoded and dropped."""

    n_rows_read: int = 0
    n_rows_kept: int = 0
    n_rows_dropped: int = 0
    dropped_columns: list[dict] = field(default_factory=list)
    one_hot: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_rows_read": self.n_rows_read,
            "n_rows_kept": self.n_rows_kept,
            "n_rows_dropped": self.n_rows_dropped,
            "dropped_columns": self.dropped_columns,
            "one_hot": self.one_hot,
        }


@dataclass
class Dataset:
    """Column-major numeric feature matrix plus target vector.

    ``features`` is an (n, j) float64 array stored Fortran-ordered so that
    column slices are contiguous. All values are finite after ingestion.
    """

    features: np.ndarray
    target: np.ndarray
    column_names: list[str]
    column_kinds: list[str]
    summary: IngestSummary | None = None

    def __post_init__(self) -> None:
        self.features = np.asfortranarray(np.asarray(self.features, dtype=np.float64))
        self.target = np.asarray(self.target, dtype=np.float64)
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, j = self.features.shape
        if n < 1 or j < 1:
            raise DataError("dataset needs at least one row and one column")
        if self.target.shape != (n,):
            raise DataError("target length must match the row count")
        if len(self.column_names) != j or len(self.column_kinds) != j:
            raise DataError("column metadata length must match the column count")
        if not np.all(np.isfinite(self.features)) or not np.all(np.isfinite(self.target)):
            raise DataError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def j(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            self.features[rows, :],
            self.target[rows],
            list(self.column_names),
            list(self.column_kinds),
        )


@dataclass
class BinnedColumn:
    """Histogram view of one feature column.

    ``edges`` holds strictly ascending cut points; bin ``b`` covers
    ``edges[b-1] <= value < edges[b]`` with open outer intervals, so the
    number of bins is ``len(edges) + 1``.
    """

    edges: np.ndarray
    codes: np.ndarray

    def __post_init__(self) -> None:
        self.edges = np.asarray(self.edges, dtype=np.float64)
        self.codes = np.asarray(self.codes, dtype=np.uint16)

    @property
    def n_bins(self) -> int:
        return self.edges.size + 1


@dataclass
class FoldPlan:
    """Disjoint index sets covering 0..n for cross-validation."""

    n: int
    folds: list[np.ndarray]

    def train_rows(self, fold_index: int) -> np.ndarray:
        parts = [f for i, f in enumerate(self.folds) if i != fold_index]
        return np.sort(np.concatenate(parts))


def one_hot_encode(values: Sequence[str], name: str) -> tuple[list[str], np.ndarray]:
    """Encode a text column as one 0/1 float column per distinct level.

    Levels are emitted in sorted order; empty strings form their own level.
    Returns (column names, (n, levels) matrix); every row sums to exactly 1.
    """
    values = list(values)
    if not values:
        raise DataError("cannot one-hot encode an empty column")
    levels = sorted(set(values))
    arr = np.zeros((len(values), len(levels)), dtype=np.float64)
    index = {lvl: i for i, lvl in enumerate(levels)}
    for r, v in enumerate(values):
        arr[r, index[v]] = 1.0
    names = [f"{name}={lvl}" for lvl in levels]
    return names, arr


def _parse_cell(cell: str) -> float | None:
    """Parse one numeric cell; None for missing/unparseable/non-finite."""
    text = cell.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _is_numeric_like(cell: str) -> bool:
    """True when the cell is empty or parses as a float (finite or not)."""
    text = cell.strip()
    if not text:
        return True
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(
    path,
    target_column: str,
    drop_columns: Sequence[str] = (),
    one_hot_max_levels: int = DEFAULT_ONE_HOT_LEVELS,
) -> Dataset:
    """Load an RFC-4180 style CSV (header row required) into a Dataset.

    The target column must parse as a finite number on every row. Feature
    columns where every non-empty cell parses numerically are kept as
    numeric; rows with missing or non-finite cells in them are dropped.
    Other columns are one-hot encoded when they have at most
    ``one_hot_max_levels`` distinct values and dropped otherwise.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        rows = [r for r in reader if r]

    header = [h.strip() for h in header]
    if target_column not in header:
        raise DataError(f"target column {target_column!r} not found in {path.name}")
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(header)
    for r in rows:
        if len(r) != width:
            raise DataError(f"{path}: row with {len(r)} cells, header has {width}")

    summary = IngestSummary(n_rows_read=len(rows))
    columns = {name: [row[i] for row in rows] for i, name in enumerate(header)}

    target_raw = [_parse_cell(c) for c in columns[target_column]]
    if any(v is None for v in target_raw):
        raise DataError(f"target column {target_column!r} has missing or non-numeric values")

    dropped = set(drop_columns) | {target_column}
    for name in drop_columns:
        if name in header:
            summary.dropped_columns.append({"name": name, "reason": "requested"})

    numeric_cols: dict[str, list[float | None]] = {}
    text_cols: dict[str, list[str]] = {}
    for name in header:
        if name in dropped:
            continue
        cells = columns[name]
        if any(c.strip() for c in cells) and all(_is_numeric_like(c) for c in cells):
            numeric_cols[name] = [_parse_cell(c) for c in cells]
        else:
            text_cols[name] = [c.strip() for c in cells]

    keep_row = np.ones(len(rows), dtype=bool)
    for parsed in numeric_cols.values():
        keep_row &= np.array([v is not None for v in parsed])
    kept = np.flatnonzero(keep_row)
    summary.n_rows_kept = int(kept.size)
    summary.n_rows_dropped = len(rows) - int(kept.size)
    if kept.size == 0:
        raise DataError(f"{path}: every row was dropped for missing numeric values")

    names: list[str] = []
    kinds: list[str] = []
    mats: list[np.ndarray] = []
    for name in header:
        if name in numeric_cols:
            col = np.array([numeric_cols[name][i] for i in kept], dtype=np.float64)
            names.append(name)
            kinds.append(KIND_NUMERIC)
            mats.append(col[:, None])
        elif name in text_cols:
            values = [text_cols[name][i] for i in kept]
            levels = set(values)
            if len(levels) > one_hot_max_levels:
                summary.dropped_columns.append(
                    {"name": name, "reason": f"{len(levels)} levels exceeds cap {one_hot_max_levels}"}
                )
                continue
            sub_names, mat = one_hot_encode(values, name)
            summary.one_hot[name] = [s.split("=", 1)[1] for s in sub_names]
            names.extend(sub_names)
            kinds.extend([KIND_ONE_HOT] * len(sub_names))
            mats.append(mat)

    if not mats:
        raise DataError(f"{path}: no usable feature columns")
    features = np.concatenate(mats, axis=1)
    target = np.array([target_raw[i] for i in kept], dtype=np.float64)
    return Dataset(features, target, names, kinds, summary=summary)


def build_bins(values, max_bins: int = DEFAULT_MAX_BINS) -> BinnedColumn:
    """Bin one column with equal-frequency (quantile) cut points.

    When the column has at most ``max_bins`` distinct values, each distinct
    value gets its own bin (cut points are midpoints between consecutive
    distinct values), so binning loses nothing. Codes are monotone in the
    raw values either way.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DataError("cannot bin an empty column")
    if not np.all(np.isfinite(values)):
        raise DataError("cannot bin non-finite values")
    if max_bins < 2:
        raise DataError("max_bins must be at least 2")
    if max_bins > np.iinfo(np.uint16).max + 1:
        raise DataError("max_bins exceeds the uint16 code range")

    distinct = np.unique(values)
    if distinct.size <= max_bins:
        edges = (distinct[:-1] + distinct[1:]) / 2.0
    else:
        quantiles = np.quantile(values, np.arange(1, max_bins) / max_bins)
        edges = np.unique(quantiles)
        lo, hi = distinct[0], distinct[-1]
        edges = edges[(edges > lo) & (edges <= hi)]
    codes = np.searchsorted(edges, values, side="right").astype(np.uint16)
    return BinnedColumn(edges=edges, codes=codes)


def bin_dataset(dataset: Dataset, max_bins: int = DEFAULT_MAX_BINS) -> list[BinnedColumn]:
    return [build_bins(dataset.features[:, f], max_bins) for f in range(dataset.j)]


def kfold_indices(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffle 0..n into k folds whose sizes differ by at most one."""
    if k < 2:
        raise DataError("need at least 2 folds")
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = [np.sort(part) for part in np.array_split(perm, k)]
    return FoldPlan(n=n, folds=folds)

"""Feature matrices with a binary class column and per-row project provenance.

The on-disk format is plain CSV: one header row, numeric feature columns,
a class column (default ``timeOpenClass``) with values ``le`` / ``gt``, and
an optional ``project`` column carrying provenance. Datasets are immutable
after construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CLASS_COLUMN = "timeOpenClass"
PROJECT_COLUMN = "project"
POSITIVE_LABEL = "le"   # closes within the threshold
NEGATIVE_LABEL = "gt"   # takes longer than the threshold


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureColumn:
    """One named numeric column; values must be finite."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError(f"column {self.name!r}: values must be 1-D")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise ValueError(
                f"column {self.name!r}: non-finite value at row {bad[0] + 1}"
            )
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Dataset:
    """Ordered feature columns, binary labels (1 = positive), provenance."""

    columns: tuple[FeatureColumn, ...]
    labels: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1 or len(labels) < 1:
            raise ValueError("labels must be a non-empty 1-D sequence")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be binary (0 or 1)")
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names")
        for c in cols:
            if len(c) != len(labels):
                raise ValueError(
                    f"column {c.name!r} has {len(c)} rows, labels have {len(labels)}"
                )
        if len(self.provenance) != len(labels):
            raise ValueError("provenance length must equal row count")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> FeatureColumn:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(f"unknown column {name!r}")

    def matrix(self) -> np.ndarray:
        """Row-major (n_rows x n_features) float matrix."""
        return np.column_stack([c.values for c in self.columns])

    def row(self, i: int) -> dict[str, float]:
        return {c.name: float(c.values[i]) for c in self.columns}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for field in ("tp", "fp", "tn", "fn"):
            v = getattr(self, field)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{field} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _parse_cell(text: str, row: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(
            f"non-numeric feature cell at row {row}, column {name!r}: {text!r}"
        ) from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite feature cell at row {row}, column {name!r}")
    return value


def load_csv(path, class_column: str = CLASS_COLUMN) -> Dataset:
    """Read a labeled CSV into a Dataset.

    All columns except `class_column` and the optional `project` column are
    parsed as numeric features. Any unparseable or non-finite cell raises,
    naming the (1-based) data row and column.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if class_column not in header:
            raise ValueError(f"{path}: header has no class column {class_column!r}")
        if len(set(header)) != len(header):
            raise ValueError(f"{path}: duplicate column names in header")
        class_idx = header.index(class_column)
        proj_idx = header.index(PROJECT_COLUMN) if PROJECT_COLUMN in header else None
        feat_idx = [
            i for i in range(len(header)) if i != class_idx and i != proj_idx
        ]
        values: list[list[float]] = [[] for _ in feat_idx]
        labels: list[int] = []
        provenance: list[str] = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ValueError(f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}")
            lab = row[class_idx]
            if lab == POSITIVE_LABEL:
                labels.append(1)
            elif lab == NEGATIVE_LABEL:
                labels.append(0)
            else:
                raise ValueError(
                    f"{path}: unknown class label {lab!r} at row {row_no} "
                    f"(expected {POSITIVE_LABEL!r} or {NEGATIVE_LABEL!r})"
                )
            provenance.append(row[proj_idx] if proj_idx is not None else "")
            for k, i in enumerate(feat_idx):
                values[k].append(_parse_cell(row[i], row_no, header[i]))
    if not labels:
        raise ValueError(f"{path}: no data rows")
    columns = tuple(
        FeatureColumn(header[i], np.array(values[k]))
        for k, i in enumerate(feat_idx)
    )
    return Dataset(columns, np.array(labels, dtype=np.int8), tuple(provenance))


def format_number(x: float) -> str:
    """Integral values render without a decimal point, others via repr."""
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def write_csv(dataset: Dataset, path, class_column: str = CLASS_COLUMN) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([PROJECT_COLUMN, *dataset.feature_names, class_column])
        for i in range(dataset.n_rows):
            label = POSITIVE_LABEL if dataset.labels[i] else NEGATIVE_LABEL
            writer.writerow(
                [dataset.provenance[i]]
                + [format_number(c.values[i]) for c in dataset.columns]
                + [label]
            )


def project(dataset: Dataset, keep: Iterable[str]) -> Dataset:
    """Restrict to the named columns, preserving original column order."""
    keep = set(keep)
    if not keep:
        raise ValueError("keep set must be non-empty")
    unknown = keep - set(dataset.feature_names)
    if unknown:
        raise KeyError(f"unknown column names: {sorted(unknown)}")
    cols = tuple(c for c in dataset.columns if c.name in keep)
    return Dataset(cols, dataset.labels, dataset.provenance)


def class_counts(dataset: Dataset) -> tuple[int, int]:
    """(positives, negatives); sums to the row count."""
    pos = int(dataset.labels.sum())
    return pos, dataset.n_rows - pos


def take(dataset: Dataset, indices) -> Dataset:
    """Row subset in the given index order."""
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        raise ValueError("cannot take an empty row subset")
    cols = tuple(FeatureColumn(c.name, c.values[idx].copy()) for c in dataset.columns)
    return Dataset(
        cols,
        dataset.labels[idx].copy(),
        tuple(dataset.provenance[i] for i in idx),
    )


def from_rows(
    names: Sequence[str],
    rows: Sequence[Sequence[float]],
    labels: Sequence[int],
    provenance: Sequence[str] | None = None,
) -> Dataset:
    """Convenience constructor from row-major data."""
    if provenance is None:
        provenance = [""] * len(labels)
    arr = np.asarray(rows, dtype=float).reshape(len(labels), len(names))
    cols = tuple(FeatureColumn(n, arr[:, j].copy()) for j, n in enumerate(names))
    return Dataset(cols, np.asarray(labels, dtype=np.int8), tuple(provenance))

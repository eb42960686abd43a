"""Binary close-time targets: one labeled dataset per lifetime threshold.

An issue is positive (``le``) when it closed within the threshold number
of days of being opened, inclusive; 7.0 days against the 7-day spec is
positive, 7.0001 is not. Days are 24-hour spans of the second-resolution
timestamps. Sticky (still-open) issues carry no label and are dropped
before binarization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ingest import FEATURE_NAMES, IssueRecord
from .tabular import Dataset, FeatureColumn

THRESHOLD_DAYS = (1, 7, 14, 30, 90)


@dataclass(frozen=True)
class ThresholdSpec:
    days: int

    def __post_init__(self):
        if self.days not in THRESHOLD_DAYS:
            raise ValueError(
                f"threshold must be one of {THRESHOLD_DAYS}, got {self.days}"
            )


def drop_sticky(records: Sequence[IssueRecord]) -> list[IssueRecord]:
    """Keep exactly the closed issues, in their original order."""
    return [r for r in records if r.closed_at is not None]


def binarize(records: Sequence[IssueRecord], spec: ThresholdSpec) -> Dataset:
    """Labeled Dataset for one threshold; features pass through untouched."""
    if not records:
        raise ValueError("no records to binarize")
    sticky = [r.issue_id for r in records if r.is_sticky]
    if sticky:
        raise ValueError(
            f"{len(sticky)} sticky record(s) present (run drop_sticky first), "
            f"e.g. {sticky[0]!r}"
        )
    labels = np.array(
        [1 if r.time_open_days <= spec.days else 0 for r in records],
        dtype=np.int8,
    )
    columns = tuple(
        FeatureColumn(
            name, np.array([float(r.features[name]) for r in records])
        )
        for name in FEATURE_NAMES
    )
    return Dataset(columns, labels, tuple(r.project for r in records))

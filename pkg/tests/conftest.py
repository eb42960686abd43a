"""Shared builders for synthetic datasets, records, and raw dumps."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from closetime import tabular
from closetime.ingest import FEATURE_NAMES, IssueRecord, SECONDS_PER_DAY

BASE_T = 1_600_000_000.0  # fixed epoch anchor so fixtures stay deterministic


def make_record(
    project="proj",
    issue_id="1",
    creator="alice",
    opened_days=0.0,
    lifetime_days=None,
    **feature_overrides,
) -> IssueRecord:
    features = {name: 0 for name in FEATURE_NAMES}
    features.update(feature_overrides)
    opened = BASE_T + opened_days * SECONDS_PER_DAY
    closed = None if lifetime_days is None else opened + lifetime_days * SECONDS_PER_DAY
    return IssueRecord(
        project=project,
        issue_id=str(issue_id),
        creator=creator,
        opened_at=opened,
        closed_at=closed,
        features=features,
    )


def random_records(rng, n, project="proj", max_days=200.0):
    records = []
    for i in range(n):
        records.append(
            make_record(
                project=project,
                issue_id=i,
                opened_days=float(rng.uniform(0, 1000)),
                lifetime_days=float(rng.uniform(0, max_days)),
                issueCleanedBodyLen=int(rng.integers(0, 100)),
                nCommitsInProject=int(rng.integers(0, 50)),
            )
        )
    return records


def separable_dataset(name, seed, n_per_class=100, feature="f"):
    """Two well-separated value blocks: any learner should score perfectly."""
    rng = np.random.default_rng(seed)
    pos = rng.integers(0, 100, n_per_class).astype(float)
    neg = rng.integers(200, 300, n_per_class).astype(float)
    values = np.concatenate([pos, neg])
    noise = rng.normal(50.0, 10.0, 2 * n_per_class)
    labels = np.array([1] * n_per_class + [0] * n_per_class)
    return tabular.from_rows(
        [feature, "noise"],
        np.column_stack([values, noise]),
        labels,
        [name] * (2 * n_per_class),
    )


def write_dump(root: Path, name: str, issues, commits) -> Path:
    """Write a raw dump directory; issues/commits are plain JSON objects."""
    path = root / name
    path.mkdir(parents=True, exist_ok=True)
    (path / "issues.json").write_text(json.dumps(issues), encoding="utf-8")
    (path / "commits.json").write_text(json.dumps(commits), encoding="utf-8")
    return path


def synthetic_dump_objects(rng, n_issues, n_authors=6, commit_rate=3.0):
    """Raw issue/commit JSON objects with activity clustered in time.

    Lifetimes follow the created activity level so learners have signal:
    issues born into busy periods close faster.
    """
    authors = [f"dev{i}" for i in range(n_authors)]
    commits = []
    t = BASE_T
    for _ in range(int(n_issues * commit_rate)):
        t += float(rng.exponential(0.3 * SECONDS_PER_DAY))
        commits.append(
            {"author": authors[int(rng.integers(n_authors))], "committed_at": t}
        )
    horizon = t
    issues = []
    for i in range(n_issues):
        opened = BASE_T + float(rng.uniform(0, max(horizon - BASE_T, 1.0)))
        busy = sum(
            1 for c in commits if opened - 30 * SECONDS_PER_DAY <= c["committed_at"] < opened
        )
        scale = 2.0 if busy > commit_rate * 20 else 40.0
        lifetime = float(rng.exponential(scale)) * SECONDS_PER_DAY
        sticky = rng.random() < 0.05
        issues.append(
            {
                "id": f"I-{i}",
                "creator": authors[int(rng.integers(n_authors))],
                "opened_at": opened,
                "closed_at": None if sticky else opened + lifetime,
                "title": " ".join(["word"] * int(rng.integers(1, 8))),
                "description": " ".join(["body"] * int(rng.integers(0, 30))),
            }
        )
    return issues, commits


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

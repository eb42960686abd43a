"""Extract leakage-free contextual features from raw issue/commit dumps.

A dump directory holds two JSON files:

``issues.json``  — list of objects with ``id``, ``creator``, ``opened_at``,
    optional ``closed_at`` (null/absent while the issue is still open),
    and optional ``title`` / ``description`` strings.
``commits.json`` — list of objects with ``author`` and ``committed_at``.

Timestamps are UTC epoch seconds or ISO-8601 strings. Every count feature
is computed over the half-open window [opened_at - 90 days, opened_at):
an event at exactly opened_at - 90d is counted, an event at opened_at is
not, so nothing generated at or after issue creation can leak in.
"""

from __future__ import annotations

import csv
import json
import re
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import tabular
from .tabular import Dataset

FEATURE_NAMES = (
    "issueCleanedBodyLen",
    "nCommitsByCreator",
    "nCommitsInProject",
    "nIssuesByCreator",
    "nIssuesByCreatorClosed",
    "nIssuesCreatedInProject",
    "nIssuesCreatedInProjectClosed",
)

SECONDS_PER_DAY = 86400.0
WINDOW_SECONDS = 90 * SECONDS_PER_DAY

_CODE_FENCE_RE = re.compile(r"```.*?```", re.DOTALL)
_HTML_TAG_RE = re.compile(r"<[^>]+>")


@dataclass(frozen=True)
class CommitEvent:
    project: str
    author: str
    committed_at: float

    def __post_init__(self):
        if not self.author:
            raise ValueError("commit author must be a non-empty string")


@dataclass(frozen=True)
class IssueRecord:
    """One issue with its seven creation-time feature values."""

    project: str
    issue_id: str
    creator: str
    opened_at: float
    closed_at: float | None
    features: Mapping[str, int]

    def __post_init__(self):
        if self.closed_at is not None and self.closed_at < self.opened_at:
            raise ValueError(
                f"issue {self.issue_id!r}: closed_at precedes opened_at"
            )
        if set(self.features) != set(FEATURE_NAMES):
            raise ValueError(f"issue {self.issue_id!r}: wrong feature key set")
        for name, value in self.features.items():
            if value < 0:
                raise ValueError(f"issue {self.issue_id!r}: negative {name}")
        object.__setattr__(self, "features", dict(self.features))

    @property
    def is_sticky(self) -> bool:
        return self.closed_at is None

    @property
    def time_open_days(self) -> float | None:
        if self.closed_at is None:
            return None
        return (self.closed_at - self.opened_at) / SECONDS_PER_DAY

    @property
    def body_word_count(self) -> int:
        return self.features["issueCleanedBodyLen"]


@dataclass
class ProjectDump:
    """Normalized raw events for one project, plus parse diagnostics."""

    project: str
    issues: list[dict]
    commits: list[CommitEvent]
    diagnostics: list[str] = field(default_factory=list)
    _index: "_EventIndex | None" = field(default=None, repr=False, compare=False)

    def index(self) -> "_EventIndex":
        if self._index is None:
            self._index = _EventIndex(self)
        return self._index


def parse_timestamp(value) -> float:
    """Epoch seconds from a number or ISO-8601 string (naive means UTC)."""
    if isinstance(value, bool):
        raise ValueError(f"not a timestamp: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().replace("Z", "+00:00")
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValueError(f"not a timestamp: {value!r}")


def clean_body_word_count(title, description) -> int:
    """Words in title+description after dropping code fences and HTML tags."""
    text = f"{title or ''} {description or ''}"
    text = _CODE_FENCE_RE.sub(" ", text)
    text = _HTML_TAG_RE.sub(" ", text)
    return len(text.split())


def _normalize_issue(raw, position: int) -> dict:
    if not isinstance(raw, dict):
        raise ValueError("not an object")
    if "id" not in raw:
        raise ValueError("missing id")
    creator = raw.get("creator")
    if not isinstance(creator, str) or not creator:
        raise ValueError("missing or empty creator")
    if "opened_at" not in raw or raw["opened_at"] is None:
        raise ValueError("missing opened_at")
    opened = parse_timestamp(raw["opened_at"])
    closed_raw = raw.get("closed_at")
    closed = None if closed_raw is None else parse_timestamp(closed_raw)
    if closed is not None and closed < opened:
        raise ValueError("closed_at precedes opened_at")
    return {
        "id": str(raw["id"]),
        "creator": creator,
        "opened_at": opened,
        "closed_at": closed,
        "title": raw.get("title") or "",
        "description": raw.get("description") or "",
    }


def parse_dump(path, project: str | None = None) -> ProjectDump:
    """Load a dump directory; malformed records become diagnostics, not errors."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"dump directory not found: {path}")
    project = project or path.name
    diagnostics: list[str] = []

    def load_json(name):
        file = path / name
        if not file.exists():
            raise FileNotFoundError(f"missing {name} in {path}")
        with open(file, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise ValueError(f"{file}: expected a JSON list")
        return data

    issues = []
    for i, raw in enumerate(load_json("issues.json")):
        try:
            issues.append(_normalize_issue(raw, i))
        except ValueError as exc:
            diagnostics.append(f"issues[{i}]: {exc}")

    commits = []
    for i, raw in enumerate(load_json("commits.json")):
        try:
            if not isinstance(raw, dict):
                raise ValueError("not an object")
            author = raw.get("author")
            if not isinstance(author, str) or not author:
                raise ValueError("missing or empty author")
            commits.append(
                CommitEvent(project, author, parse_timestamp(raw["committed_at"]))
            )
        except (KeyError, ValueError) as exc:
            diagnostics.append(f"commits[{i}]: {exc}")

    if not issues:
        raise ValueError(f"{path}: no parseable issues")
    return ProjectDump(project, issues, commits, diagnostics)


class _EventIndex:
    """Sorted-array indexes so per-issue window counts stay O(log n)."""

    def __init__(self, dump: ProjectDump):
        self.commit_times = np.sort([c.committed_at for c in dump.commits])
        by_author: dict[str, list[float]] = {}
        for c in dump.commits:
            by_author.setdefault(c.author, []).append(c.committed_at)
        self.commits_by_author = {a: np.sort(t) for a, t in by_author.items()}

        self.opened_times = np.sort([iss["opened_at"] for iss in dump.issues])
        opened_by, closed_by = {}, {}
        for iss in dump.issues:
            opened_by.setdefault(iss["creator"], []).append(iss["opened_at"])
            if iss["closed_at"] is not None:
                closed_by.setdefault(iss["creator"], []).append(iss["closed_at"])
        self.opened_by_creator = {c: np.sort(t) for c, t in opened_by.items()}
        self.closed_by_creator = {c: np.sort(t) for c, t in closed_by.items()}

        closed_pairs = sorted(
            (iss["closed_at"], iss["opened_at"])
            for iss in dump.issues
            if iss["closed_at"] is not None
        )
        self.closed_sorted = np.array([p[0] for p in closed_pairs])
        self.opened_given_closed = np.array([p[1] for p in closed_pairs])

    @staticmethod
    def count_in(times: np.ndarray, lo: float, hi: float) -> int:
        """Events with lo <= t < hi."""
        if times.size == 0:
            return 0
        return int(
            np.searchsorted(times, hi, side="left")
            - np.searchsorted(times, lo, side="left")
        )

    def count_opened_and_closed_in(self, lo: float, hi: float) -> int:
        """Issues with both endpoints inside [lo, hi)."""
        if self.closed_sorted.size == 0:
            return 0
        k = int(np.searchsorted(self.closed_sorted, hi, side="left"))
        return int(np.count_nonzero(self.opened_given_closed[:k] >= lo))


_EMPTY = np.array([])


def extract_features(dump: ProjectDump, issue: dict) -> IssueRecord:
    """Compute the seven feature values for one issue.

    Only events strictly before the issue's creation are ever counted;
    nIssuesByCreatorClosed counts the creator's issues closed inside the
    window regardless of when they were opened, while the project-level
    closed count requires open and close both inside the window.
    """
    if "opened_at" not in issue or issue["opened_at"] is None:
        raise ValueError("issue has no opened_at")
    if not issue.get("creator"):
        raise ValueError("issue has no creator")
    t = float(issue["opened_at"])
    lo = t - WINDOW_SECONDS
    idx = dump.index()
    creator = issue["creator"]
    features = {
        "issueCleanedBodyLen": clean_body_word_count(
            issue.get("title"), issue.get("description")
        ),
        "nCommitsByCreator": idx.count_in(
            idx.commits_by_author.get(creator, _EMPTY), lo, t
        ),
        "nCommitsInProject": idx.count_in(idx.commit_times, lo, t),
        "nIssuesByCreator": idx.count_in(
            idx.opened_by_creator.get(creator, _EMPTY), lo, t
        ),
        "nIssuesByCreatorClosed": idx.count_in(
            idx.closed_by_creator.get(creator, _EMPTY), lo, t
        ),
        "nIssuesCreatedInProject": idx.count_in(idx.opened_times, lo, t),
        "nIssuesCreatedInProjectClosed": idx.count_opened_and_closed_in(lo, t),
    }
    return IssueRecord(
        project=dump.project,
        issue_id=str(issue["id"]),
        creator=creator,
        opened_at=t,
        closed_at=issue.get("closed_at"),
        features=features,
    )


def build_dataset(dump: ProjectDump) -> list[IssueRecord]:
    """One record per issue, sticky ones included, ordered by open time.

    Duplicate issue ids are kept (one row each) and flagged in the dump's
    diagnostics.
    """
    if not dump.issues:
        raise ValueError(f"{dump.project}: dump has no issues")
    records = [extract_features(dump, issue) for issue in dump.issues]
    records.sort(key=lambda r: (r.opened_at, r.issue_id))
    seen: set[str] = set()
    for r in records:
        if r.issue_id in seen:
            dump.diagnostics.append(f"duplicate issue id {r.issue_id!r}")
        seen.add(r.issue_id)
    return records


def combine(datasets: Sequence[Dataset]) -> Dataset:
    """Row-wise concatenation; provenance keeps each row's source project."""
    if not datasets:
        raise ValueError("nothing to combine")
    schema = datasets[0].feature_names
    for d in datasets[1:]:
        if d.feature_names != schema:
            raise ValueError(
                f"schema mismatch: {d.feature_names} vs {schema}"
            )
    columns = tuple(
        tabular.FeatureColumn(
            name, np.concatenate([d.column(name).values for d in datasets])
        )
        for name in schema
    )
    labels = np.concatenate([d.labels for d in datasets])
    provenance = tuple(p for d in datasets for p in d.provenance)
    return Dataset(columns, labels, provenance)


RECORDS_HEADER = (
    "project",
    "issue_id",
    "creator",
    "opened_at",
    "closed_at",
    *FEATURE_NAMES,
)


def write_records_csv(records: Sequence[IssueRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORDS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.project,
                    r.issue_id,
                    r.creator,
                    tabular.format_number(r.opened_at),
                    "" if r.closed_at is None else tabular.format_number(r.closed_at),
                    *[str(int(r.features[name])) for name in FEATURE_NAMES],
                ]
            )


def read_records_csv(path) -> list[IssueRecord]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"records file not found: {path}")
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORDS_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for i, row in enumerate(reader, start=1):
            try:
                records.append(
                    IssueRecord(
                        project=row["project"],
                        issue_id=row["issue_id"],
                        creator=row["creator"],
                        opened_at=float(row["opened_at"]),
                        closed_at=float(row["closed_at"]) if row["closed_at"] else None,
                        features={
                            name: int(float(row[name])) for name in FEATURE_NAMES
                        },
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}: bad record at row {i}: {exc}") from None
    if not records:
        raise ValueError(f"{path}: no records")
    return records

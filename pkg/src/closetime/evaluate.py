"""Evaluation harness: metrics, stratified cross-validation, round-robin
cross-project transfer, badness flags, medians, and report rendering.

Feature selection and every model fit happen strictly inside the training
split of each fold or pool; the round-robin loop additionally asserts on
every run that no training row shares provenance with the held-out
project. Fold confusions are pooled (summed) before metrics are taken, so
each protocol yields one number per cell.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import cfs, tree
from .ingest import IssueRecord, combine
from .tabular import ConfusionCounts, Dataset, class_counts, project, take
from .targets import ThresholdSpec

BAD_THRESHOLD = 0.33
DISTRIBUTION_DAYS = (1, 7, 14, 30, 90, 180, 365, 1000)


class LeakageError(RuntimeError):
    """Training data is contaminated with held-out-project rows."""


@dataclass(frozen=True)
class MetricTriple:
    """Precision, recall, and false-alarm rate in [0,1].

    Metrics whose denominator was zero are reported as 0 and named in
    `undefined`.
    """

    prec: float
    recall: float
    pf: float
    undefined: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("prec", "recall", "pf"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")


def metrics(counts: ConfusionCounts) -> MetricTriple:
    """prec = TP/(TP+FP), recall = TP/(TP+FN), pf = FP/(TN+FP)."""
    undefined = set()

    def ratio(num, den, name):
        if den == 0:
            undefined.add(name)
            return 0.0
        return num / den

    return MetricTriple(
        prec=ratio(counts.tp, counts.tp + counts.fp, "prec"),
        recall=ratio(counts.tp, counts.tp + counts.fn, "recall"),
        pf=ratio(counts.fp, counts.tn + counts.fp, "pf"),
        undefined=frozenset(undefined),
    )


def is_bad(metric: MetricTriple) -> bool:
    """The red-cell rule: high false alarms or low precision/recall."""
    return (
        metric.pf > BAD_THRESHOLD
        or metric.prec < BAD_THRESHOLD
        or metric.recall < BAD_THRESHOLD
    )


def confusion(y_true, y_pred) -> ConfusionCounts:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    if t.shape != p.shape:
        raise ValueError("prediction length mismatch")
    return ConfusionCounts(
        tp=int((t & p).sum()),
        fp=int((~t & p).sum()),
        tn=int((~t & ~p).sum()),
        fn=int((t & ~p).sum()),
    )


@dataclass(frozen=True)
class FoldPlan:
    assignment: tuple[int, ...]
    n_folds: int


def make_fold_plan(labels, n_folds: int = 10, seed: int = 1) -> FoldPlan:
    """Seeded shuffle, then stratified round-robin dealing by class.

    Per-fold positive counts land within one instance of p/n_folds.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    assignment = np.empty(len(labels), dtype=int)
    slot = 0
    for cls in (1, 0):
        for i in order:
            if labels[i] == cls:
                assignment[i] = slot % n_folds
                slot += 1
    return FoldPlan(tuple(int(a) for a in assignment), n_folds)


@dataclass(frozen=True)
class ReportRow:
    """One evaluated (dataset, threshold, protocol) cell."""

    dataset: str
    days: int | None
    protocol: str                  # "crossval" or "round_robin"
    metric: MetricTriple
    counts: ConfusionCounts
    selected: tuple[str, ...]
    tree_text: str = ""
    tree_ref: str = ""
    bad: bool = False
    note: str = ""


def _fit(train: Dataset) -> tuple[tuple[str, ...], tree.DecisionTree]:
    """CFS selection then a tree on the projected training data."""
    selected = tuple(sorted(cfs.select(train)))
    projected = project(train, selected)
    model = tree.learn(projected, tree.min_partition(projected.n_rows))
    return selected, model


def _dataset_name(dataset: Dataset) -> str:
    distinct = {p for p in dataset.provenance if p}
    if len(distinct) == 1:
        return next(iter(distinct))
    return "combined" if distinct else "dataset"


def crossval10(
    dataset: Dataset,
    seed: int = 1,
    *,
    days: int | None = None,
    name: str | None = None,
    n_folds: int = 10,
) -> ReportRow:
    """Stratified 10-fold cross-validation with pooled confusions.

    Selection, discretization, and the tree are refit inside every
    training split. When the minority class has fewer instances than
    folds the row degenerates to zeros, mirroring the all-red local rows
    seen on heavily imbalanced data. The reported feature list and tree
    are the deployment artifacts fit on the full dataset.
    """
    name = name or _dataset_name(dataset)
    selected_full, model_full = _fit(dataset)
    rendered = tree.render(model_full)

    pos, neg = class_counts(dataset)
    if min(pos, neg) < n_folds:
        zero = ConfusionCounts(0, 0, 0, 0)
        metric = metrics(zero)
        return ReportRow(
            name, days, "crossval", metric, zero, selected_full, rendered,
            bad=is_bad(metric),
            note=f"degenerate: minority class has {min(pos, neg)} instance(s)",
        )

    plan = make_fold_plan(dataset.labels, n_folds=n_folds, seed=seed)
    assignment = np.asarray(plan.assignment)
    tp = fp = tn = fn = 0
    for fold in range(n_folds):
        test_idx = np.flatnonzero(assignment == fold)
        if test_idx.size == 0:
            continue
        train_idx = np.flatnonzero(assignment != fold)
        train = take(dataset, train_idx)
        test = take(dataset, test_idx)
        selected, model = _fit(train)
        pred = tree.predict_dataset(model, test)
        c = confusion(test.labels, pred)
        tp, fp, tn, fn = tp + c.tp, fp + c.fp, tn + c.tn, fn + c.fn
    counts = ConfusionCounts(tp, fp, tn, fn)
    metric = metrics(counts)
    return ReportRow(
        name, days, "crossval", metric, counts, selected_full, rendered,
        bad=is_bad(metric),
    )


def round_robin(
    datasets: Mapping[str, Dataset] | Sequence[tuple[str, Dataset]],
    spec: ThresholdSpec,
) -> list[ReportRow]:
    """Hold out each project in turn; train on the concatenated rest.

    Every run checks that the training pool shares no provenance with the
    held-out project and raises LeakageError otherwise.
    """
    items = list(datasets.items()) if isinstance(datasets, Mapping) else list(datasets)
    if len(items) < 2:
        raise ValueError("round robin needs at least two datasets")
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("dataset names must be unique")
    schema = items[0][1].feature_names
    for n, d in items[1:]:
        if d.feature_names != schema:
            raise ValueError(f"schema mismatch for {n!r}")

    rows = []
    for held_out, test in items:
        pool = combine([d for n, d in items if n != held_out])
        overlap = set(test.provenance) & set(pool.provenance)
        if overlap:
            raise LeakageError(
                f"training pool for held-out {held_out!r} contains rows from "
                f"{sorted(overlap)}"
            )
        selected, model = _fit(pool)
        pred = tree.predict_dataset(model, test)
        counts = confusion(test.labels, pred)
        metric = metrics(counts)
        rows.append(
            ReportRow(
                held_out, spec.days, "round_robin", metric, counts,
                selected, tree.render(model), bad=is_bad(metric),
            )
        )
    return rows


def _lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def medians(rows: Sequence[ReportRow], spec: ThresholdSpec | None = None) -> MetricTriple:
    """Component-wise median over rows (lower middle on even counts)."""
    if spec is not None:
        rows = [r for r in rows if r.days == spec.days]
    if not rows:
        raise ValueError("no rows to take medians over")
    return MetricTriple(
        prec=_lower_median([r.metric.prec for r in rows]),
        recall=_lower_median([r.metric.recall for r in rows]),
        pf=_lower_median([r.metric.pf for r in rows]),
    )


def class_distribution(
    records: Sequence[IssueRecord],
    thresholds: Sequence[float] = DISTRIBUTION_DAYS,
) -> dict[str, tuple[float, ...]]:
    """Per-project relative bucket sizes of issue lifetimes.

    Bucket i counts lifetimes in (thresholds[i-1], thresholds[i]] days
    (the first bucket starts at 0); counts are scaled by each project's
    largest bucket so the fullest bucket reads 1.0. Lifetimes beyond the
    last threshold fall outside every bucket.
    """
    if not records:
        raise ValueError("no records")
    sticky = [r.issue_id for r in records if r.is_sticky]
    if sticky:
        raise ValueError(f"sticky records present, e.g. {sticky[0]!r}")
    by_project: dict[str, list[float]] = {}
    for r in records:
        by_project.setdefault(r.project, []).append(r.time_open_days)
    out = {}
    for proj, times in sorted(by_project.items()):
        counts = [0] * len(thresholds)
        for t in times:
            prev = 0.0
            for i, edge in enumerate(thresholds):
                if prev < t <= edge or (i == 0 and t == 0.0):
                    counts[i] += 1
                    break
                prev = edge
        top = max(counts)
        out[proj] = tuple((c / top if top else 0.0) for c in counts)
    return out


# ---------------------------------------------------------------------------
# report rendering and row persistence

ROWS_FIELDS = (
    "dataset", "days", "protocol", "tp", "fp", "tn", "fn",
    "prec", "recall", "pf", "undefined", "bad", "note", "selected", "tree_ref",
)


@dataclass(frozen=True)
class RenderedReport:
    text: str
    report_csv: str
    medians_csv: str


def _row_record(r: ReportRow) -> dict:
    return {
        "dataset": r.dataset,
        "days": "" if r.days is None else r.days,
        "protocol": r.protocol,
        "tp": r.counts.tp, "fp": r.counts.fp, "tn": r.counts.tn, "fn": r.counts.fn,
        "prec": repr(r.metric.prec),
        "recall": repr(r.metric.recall),
        "pf": repr(r.metric.pf),
        "undefined": ";".join(sorted(r.metric.undefined)),
        "bad": int(r.bad),
        "note": r.note,
        "selected": ";".join(r.selected),
        "tree_ref": r.tree_ref,
    }


def _sorted_rows(rows: Iterable[ReportRow]) -> list[ReportRow]:
    return sorted(rows, key=lambda r: (r.dataset, r.days or 0, r.protocol))


def rows_to_csv(rows: Sequence[ReportRow], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.DictWriter(buf, fieldnames=ROWS_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in _sorted_rows(rows):
        writer.writerow(_row_record(r))
    return buf.getvalue()


def write_rows_csv(rows, path, header: Sequence[str] = ()) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(rows_to_csv(rows, header), encoding="utf-8")


def read_rows_csv(path) -> list[ReportRow]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    rows = []
    for rec in reader:
        counts = ConfusionCounts(
            int(rec["tp"]), int(rec["fp"]), int(rec["tn"]), int(rec["fn"])
        )
        metric = MetricTriple(
            float(rec["prec"]), float(rec["recall"]), float(rec["pf"]),
            frozenset(v for v in rec["undefined"].split(";") if v),
        )
        rows.append(
            ReportRow(
                dataset=rec["dataset"],
                days=int(rec["days"]) if rec["days"] else None,
                protocol=rec["protocol"],
                metric=metric,
                counts=counts,
                selected=tuple(v for v in rec["selected"].split(";") if v),
                tree_ref=rec["tree_ref"],
                bad=bool(int(rec["bad"])),
                note=rec["note"],
            )
        )
    return rows


def medians_to_csv(rows: Sequence[ReportRow], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write("days,protocol,n,prec,recall,pf\n")
    keys = sorted({(r.days, r.protocol) for r in rows}, key=lambda k: (k[0] or 0, k[1]))
    for days, protocol in keys:
        group = [r for r in rows if r.days == days and r.protocol == protocol]
        med = medians(group)
        buf.write(
            f"{'' if days is None else days},{protocol},{len(group)},"
            f"{med.prec!r},{med.recall!r},{med.pf!r}\n"
        )
    return buf.getvalue()


def _pct(value: float, flag: bool) -> str:
    return f"{round(100 * value):>4d}{'*' if flag else ' '}"


def _metric_cells(metric: MetricTriple) -> str:
    return (
        _pct(metric.prec, metric.prec < BAD_THRESHOLD)
        + _pct(metric.recall, metric.recall < BAD_THRESHOLD)
        + _pct(metric.pf, metric.pf > BAD_THRESHOLD)
    )


def render_report(rows: Sequence[ReportRow], header: Sequence[str] = ()) -> RenderedReport:
    """Text table (per-project cells plus a median summary) and CSV tables."""
    rows = _sorted_rows(rows)
    if not rows:
        raise ValueError("empty report")
    protocols = ("crossval", "round_robin")
    present = {p for p in protocols if any(r.protocol == p for r in rows)}

    lines = [f"# {line}" for line in header]
    name_w = max(12, max(len(r.dataset) for r in rows) + 1)
    lines.append(
        f"{'dataset':<{name_w}s}{'days':>5s}"
        + " | crossval (local)  | round robin (cross)"
    )
    lines.append(f"{'':<{name_w}s}{'':>5s} | prec  rec    pf   | prec  rec    pf")
    for p in protocols:
        if p not in present:
            lines.append(f"(no {p} rows in this report)")

    cells: dict[tuple[str, int | None, str], ReportRow] = {
        (r.dataset, r.days, r.protocol): r for r in rows
    }
    for dataset in sorted({r.dataset for r in rows}):
        for days in sorted({r.days for r in rows if r.dataset == dataset},
                           key=lambda d: d or 0):
            parts = [f"{dataset:<{name_w}s}{'' if days is None else days:>5}"]
            for p in protocols:
                row = cells.get((dataset, days, p))
                parts.append(" | " + (_metric_cells(row.metric) if row else " " * 15))
            lines.append("".join(parts))
    lines.append("(* = bad cell: false alarms over 33% or precision/recall under 33%)")

    lines.append("")
    lines.append("medians over projects")
    lines.append(f"{'days':>5s} {'protocol':<12s} {'prec':>5s} {'rec':>5s} {'pf':>5s}")
    keys = sorted({(r.days, r.protocol) for r in rows}, key=lambda k: (k[0] or 0, k[1]))
    for days, protocol in keys:
        med = medians([r for r in rows if r.days == days and r.protocol == protocol])
        lines.append(
            f"{'' if days is None else days:>5} {protocol:<12s} "
            f"{med.prec:>5.2f} {med.recall:>5.2f} {med.pf:>5.2f}"
        )

    return RenderedReport(
        text="\n".join(lines) + "\n",
        report_csv=rows_to_csv(rows, header),
        medians_csv=medians_to_csv(rows, header),
    )


def set_tree_ref(row: ReportRow, ref: str) -> ReportRow:
    return replace(row, tree_ref=ref)


def distribution_to_csv(
    dist: Mapping[str, Sequence[float]],
    thresholds: Sequence[float] = DISTRIBUTION_DAYS,
    header: Sequence[str] = (),
) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write("project," + ",".join(f"le_{t}" for t in thresholds) + "\n")
    for proj in sorted(dist):
        buf.write(proj + "," + ",".join(repr(v) for v in dist[proj]) + "\n")
    return buf.getvalue()

"""Command-line interface: ingest -> binarize -> select -> train -> evaluate.

One binary with subcommands; a JSON config file registers datasets for the
full `run` pipeline and flags override config values. Output paths depend
only on (dataset name, threshold, protocol), so re-running an unchanged
config overwrites every artifact with byte-identical content.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__, cfs, discretize, evaluate, ingest, tabular, tree
from .targets import THRESHOLD_DAYS, ThresholdSpec, binarize, drop_sticky

OUT_ENV_VAR = "CLOSETIME_OUT"


@dataclass(frozen=True)
class RunConfig:
    """Dataset registry plus run parameters for the full pipeline."""

    datasets: dict[str, str]
    thresholds: tuple[int, ...]
    seed: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("config registers no datasets")
        if not self.thresholds:
            raise ValueError("config must list at least one threshold")
        for t in self.thresholds:
            if t not in THRESHOLD_DAYS:
                raise ValueError(f"unsupported threshold {t}; pick from {THRESHOLD_DAYS}")
        object.__setattr__(self, "thresholds", tuple(self.thresholds))


def _no_dup_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r} in config")
        out[key] = value
    return out


def load_run_config(path, *, out_dir=None, seed=None) -> RunConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"), object_pairs_hook=_no_dup_keys)
    return RunConfig(
        datasets=dict(raw["datasets"]),
        thresholds=tuple(raw.get("thresholds", THRESHOLD_DAYS)),
        seed=seed if seed is not None else int(raw.get("seed", 1)),
        out_dir=out_dir or raw.get("out_dir", "out"),
    )


def config_hash(config: RunConfig) -> str:
    """Digest of the scientific identity of a run (registry, thresholds, seed)."""
    payload = json.dumps(
        {
            "datasets": config.datasets,
            "thresholds": list(config.thresholds),
            "seed": config.seed,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def version_and_provenance(config: RunConfig | None = None, seed: int | None = None) -> str:
    parts = [f"closetime {__version__}"]
    if config is not None:
        parts.append(f"seed={config.seed}")
        parts.append(f"config={config_hash(config)}")
    elif seed is not None:
        parts.append(f"seed={seed}")
    return " | ".join(parts)


def _labeled_name(path: Path, dataset: tabular.Dataset) -> str:
    projects = {p for p in dataset.provenance if p}
    if len(projects) == 1:
        return next(iter(projects))
    return path.stem


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_ingest(args) -> int:
    dump = ingest.parse_dump(args.dump, project=args.project)
    records = ingest.build_dataset(dump)
    ingest.write_records_csv(records, args.out)
    if args.diagnostics and dump.diagnostics:
        Path(args.diagnostics).parent.mkdir(parents=True, exist_ok=True)
        Path(args.diagnostics).write_text(
            "\n".join(dump.diagnostics) + "\n", encoding="utf-8"
        )
    sticky = sum(1 for r in records if r.is_sticky)
    print(
        f"{dump.project}: {len(records)} issues ({sticky} sticky), "
        f"{len(dump.commits)} commits, {len(dump.diagnostics)} diagnostics -> {args.out}"
    )
    return 0


def cmd_binarize(args) -> int:
    records = drop_sticky(ingest.read_records_csv(args.data))
    dataset = binarize(records, ThresholdSpec(args.days))
    tabular.write_csv(dataset, args.out)
    pos, neg = tabular.class_counts(dataset)
    print(f"{args.out}: {dataset.n_rows} rows, {pos} le / {neg} gt at {args.days} days")
    return 0


def cmd_select_features(args) -> int:
    dataset = tabular.load_csv(args.data)
    score = cfs.best_subset(dataset)
    print(f"merit={score.merit:.6f} features={','.join(sorted(score.subset))}")
    if args.dump_matrix:
        Path(args.dump_matrix).write_text(
            cfs.build_matrix(dataset).to_csv(), encoding="utf-8"
        )
    if args.dump_cuts:
        all_cuts = [
            discretize.mdl_discretize(c.values, dataset.labels, feature=c.name)
            for c in dataset.columns
        ]
        Path(args.dump_cuts).write_text(discretize.cuts_to_csv(all_cuts), encoding="utf-8")
    return 0


def cmd_train(args) -> int:
    dataset = tabular.load_csv(args.data)
    if not args.no_select:
        dataset = tabular.project(dataset, cfs.select(dataset))
    model = tree.learn(dataset, tree.min_partition(dataset.n_rows))
    rendered = tree.render(model)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(tree.to_json(model) + "\n", encoding="utf-8")
    if args.render_out:
        Path(args.render_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.render_out).write_text(rendered + "\n", encoding="utf-8")
    print(rendered)
    return 0


def _write_row_trees(rows, trees_dir) -> list:
    if not trees_dir:
        return list(rows)
    out = []
    trees_dir = Path(trees_dir)
    trees_dir.mkdir(parents=True, exist_ok=True)
    for row in rows:
        ref = f"{row.dataset}-{row.days}-{row.protocol}.txt"
        (trees_dir / ref).write_text(row.tree_text + "\n", encoding="utf-8")
        out.append(evaluate.set_tree_ref(row, ref))
    return out


def cmd_eval_local(args) -> int:
    dataset = tabular.load_csv(args.data)
    row = evaluate.crossval10(
        dataset, seed=args.seed, days=args.days,
        name=args.name or _labeled_name(Path(args.data), dataset),
    )
    rows = _write_row_trees([row], args.trees_dir)
    text = evaluate.rows_to_csv(rows, [version_and_provenance(seed=args.seed)])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_eval_cross(args) -> int:
    named = []
    for p in args.data:
        path = Path(p)
        dataset = tabular.load_csv(path)
        named.append((_labeled_name(path, dataset), dataset))
    rows = evaluate.round_robin(named, ThresholdSpec(args.days))
    rows = _write_row_trees(rows, args.trees_dir)
    text = evaluate.rows_to_csv(rows, [version_and_provenance()])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.rows:
        rows.extend(evaluate.read_rows_csv(path))
    if not rows:
        raise ValueError("no evaluation rows given")
    header = [version_and_provenance()]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rendered = evaluate.render_report(rows, header)
    (out / "report.csv").write_text(rendered.report_csv, encoding="utf-8")
    (out / "medians.csv").write_text(rendered.medians_csv, encoding="utf-8")
    (out / "summary.txt").write_text(rendered.text, encoding="utf-8")
    if args.records:
        records = drop_sticky(ingest.read_records_csv(args.records))
        dist = evaluate.class_distribution(records)
        (out / "distribution.csv").write_text(
            evaluate.distribution_to_csv(dist, header=header), encoding="utf-8"
        )
    print(f"report written to {out}")
    return 0


def run_pipeline(config: RunConfig) -> int:
    """Full pipeline over the dataset registry; artifacts land in out_dir."""
    out = Path(config.out_dir)
    header = [version_and_provenance(config)]

    closed_by_name = {}
    for name, source in config.datasets.items():
        try:
            path = Path(source)
            if path.is_dir():
                dump = ingest.parse_dump(path, project=name)
                records = ingest.build_dataset(dump)
                ingest.write_records_csv(records, out / "records" / f"{name}.csv")
                if dump.diagnostics:
                    diag = out / "records" / f"{name}-diagnostics.txt"
                    diag.write_text("\n".join(dump.diagnostics) + "\n", encoding="utf-8")
            else:
                records = ingest.read_records_csv(path)
        except (OSError, ValueError) as exc:
            raise RuntimeError(f"dataset {name!r} ({source}): {exc}") from exc
        closed = drop_sticky(records)
        if not closed:
            raise RuntimeError(f"dataset {name!r}: every issue is sticky")
        closed_by_name[name] = closed

    all_closed = [r for recs in closed_by_name.values() for r in recs]
    dist = evaluate.class_distribution(all_closed)
    (out / "distribution.csv").parent.mkdir(parents=True, exist_ok=True)
    (out / "distribution.csv").write_text(
        evaluate.distribution_to_csv(dist, header=header), encoding="utf-8"
    )

    labeled: dict[tuple[str, int], tabular.Dataset] = {}
    for name, closed in closed_by_name.items():
        for days in config.thresholds:
            try:
                dataset = binarize(closed, ThresholdSpec(days))
            except ValueError as exc:
                raise RuntimeError(f"dataset {name!r} at {days} days: {exc}") from exc
            tabular.write_csv(dataset, out / "binarized" / f"{name}-{days}.csv")
            labeled[(name, days)] = dataset

    trees_dir = out / "trees"
    trees_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for (name, days), dataset in labeled.items():
        row = evaluate.crossval10(dataset, seed=config.seed, days=days, name=name)
        ref = f"trees/{name}-{days}-crossval.txt"
        (out / ref).write_text(row.tree_text + "\n", encoding="utf-8")
        rows.append(evaluate.set_tree_ref(row, ref))
        selected = out / "selected" / f"{name}-{days}.txt"
        selected.parent.mkdir(parents=True, exist_ok=True)
        selected.write_text("\n".join(row.selected) + "\n", encoding="utf-8")

    if len(config.datasets) >= 2:
        for days in config.thresholds:
            named = [(name, labeled[(name, days)]) for name in config.datasets]
            for row in evaluate.round_robin(named, ThresholdSpec(days)):
                ref = f"trees/{row.dataset}-{days}-round_robin.txt"
                (out / ref).write_text(row.tree_text + "\n", encoding="utf-8")
                rows.append(evaluate.set_tree_ref(row, ref))

    rendered = evaluate.render_report(rows, header)
    (out / "report.csv").write_text(rendered.report_csv, encoding="utf-8")
    (out / "medians.csv").write_text(rendered.medians_csv, encoding="utf-8")
    (out / "summary.txt").write_text(rendered.text, encoding="utf-8")
    print(f"pipeline complete: {len(rows)} evaluation rows -> {out}")
    return 0


def cmd_run(args) -> int:
    import os

    out_dir = args.out or os.environ.get(OUT_ENV_VAR)
    config = load_run_config(args.config, out_dir=out_dir, seed=args.seed)
    print(version_and_provenance(config))
    return run_pipeline(config)


def cmd_version(args) -> int:
    config = load_run_config(args.config) if args.config else None
    print(version_and_provenance(config, seed=args.seed))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="closetime",
        description="Issue close-time prediction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract features from a raw JSON dump")
    p.add_argument("--dump", required=True, help="directory with issues.json + commits.json")
    p.add_argument("--out", required=True, help="records CSV to write")
    p.add_argument("--project", help="project name (default: dump directory name)")
    p.add_argument("--diagnostics", help="write parse diagnostics to this file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("binarize", help="label records at one lifetime threshold")
    p.add_argument("--data", required=True, help="records CSV from ingest")
    p.add_argument("--days", required=True, type=int, choices=THRESHOLD_DAYS)
    p.add_argument("--out", required=True, help="labeled CSV to write")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("select-features", help="CFS subset for a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--dump-matrix", help="write the correlation matrix as CSV")
    p.add_argument("--dump-cuts", help="write per-feature discretization cuts as CSV")
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("train", help="fit one tree on a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="write the model as JSON")
    p.add_argument("--render-out", help="write the rendered tree text")
    p.add_argument("--no-select", action="store_true", help="skip CFS before training")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate models")
    eval_sub = p.add_subparsers(dest="protocol", required=True)

    q = eval_sub.add_parser("local", help="stratified 10-fold cross-validation")
    q.add_argument("--data", required=True)
    q.add_argument("--days", required=True, type=int, choices=THRESHOLD_DAYS)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--name", help="dataset name for the report row")
    q.add_argument("--out", help="write the row CSV here")
    q.add_argument("--trees-dir", help="write rendered trees here")
    q.set_defaults(func=cmd_eval_local)

    q = eval_sub.add_parser("cross", help="round-robin cross-project transfer")
    q.add_argument("--data", required=True, nargs="+", help="labeled CSVs, one per project")
    q.add_argument("--days", required=True, type=int, choices=THRESHOLD_DAYS)
    q.add_argument("--out", help="write the rows CSV here")
    q.add_argument("--trees-dir", help="write rendered trees here")
    q.set_defaults(func=cmd_eval_cross)

    p = sub.add_parser("report", help="render report tables from row CSVs")
    p.add_argument("--rows", required=True, nargs="+", help="row CSVs from eval")
    p.add_argument("--records", help="records CSV for the lifetime distribution table")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help=f"output directory (overrides config and ${OUT_ENV_VAR})")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("version", help="print version and provenance")
    p.add_argument("--config", help="include this config's hash")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_version)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"closetime: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

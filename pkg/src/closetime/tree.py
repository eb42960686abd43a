"""Single binary decision tree with an aggressive minimum-partition stop.

The learner is C4.5-flavored: numeric thresholds at midpoints between
adjacent distinct values, split chosen by information gain ratio, and no
post-pruning. Growth stops once a partition cannot be divided into two
children each holding at least m = max(2, n_train // 25) instances.

Rendered text format (one line per node, preorder):

    root
    |   nCommitsInProject <= 596
    |   |   issueCleanedBodyLen <= 27 :gt
    |   |   issueCleanedBodyLen > 27 :le
    |   nCommitsInProject > 596 :gt

Every non-root line starts with the branch condition leading into the
node; leaf lines end with `` :label``. Total line count equals the node
count, and `parse_render` restores an equivalent tree from the text.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .discretize import entropy_from_counts
from .tabular import (
    Dataset,
    NEGATIVE_LABEL,
    POSITIVE_LABEL,
    format_number,
)

# Gains at or below this are treated as zero so float noise on
# mathematically null splits can never grow a spurious node.
GAIN_EPS = 1e-12

MIN_PARTITION_DIVISOR = 25


@dataclass(frozen=True)
class Leaf:
    label: int            # 1 = positive ("le"), 0 = negative ("gt")
    support: int
    purity: float

    def __post_init__(self):
        if self.support < 1:
            raise ValueError("leaf support must be >= 1")


@dataclass(frozen=True)
class Split:
    feature: str
    threshold: float
    left: "Node"           # value <= threshold
    right: "Node"          # value > threshold


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: Node

    @property
    def node_count(self) -> int:
        def count(node) -> int:
            if isinstance(node, Leaf):
                return 1
            return 1 + count(node.left) + count(node.right)

        return count(self.root)

    def features(self) -> set[str]:
        out: set[str] = set()

        def walk(node):
            if isinstance(node, Split):
                out.add(node.feature)
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out


@dataclass(frozen=True)
class StoppingRule:
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("minimum partition size must be >= 1")


def min_partition(n: int) -> StoppingRule:
    """m = max(2, floor(n / 25)) for a training set of n instances."""
    if n < 1:
        raise ValueError("training-set size must be >= 1")
    return StoppingRule(max(2, n // MIN_PARTITION_DIVISOR))


def _binary_entropy_vec(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(pos, n).shape, dtype=float)
    for part in (pos, n - pos):
        frac = part / n
        nz = frac > 0
        out[nz] -= frac[nz] * np.log2(frac[nz])
    return out


def _best_feature_split(values: np.ndarray, labels: np.ndarray, m: int):
    """Best (gain ratio, gain, threshold) for one feature, or None.

    Candidates are midpoints between adjacent distinct sorted values with
    both sides holding at least m instances and gain above GAIN_EPS.
    Within the feature: highest ratio, then highest gain, then smallest
    threshold.
    """
    order = np.argsort(values, kind="stable")
    vs = values[order]
    ys = labels[order]
    n = len(vs)
    positions = np.flatnonzero(vs[1:] > vs[:-1]) + 1
    positions = positions[(positions >= m) & (n - positions >= m)]
    if positions.size == 0:
        return None
    pos_cum = np.cumsum(ys)
    total_pos = int(pos_cum[-1])
    nl = positions.astype(float)
    nr = n - nl
    pl = pos_cum[positions - 1].astype(float)
    pr = total_pos - pl
    h_parent = entropy_from_counts((total_pos, n - total_pos), n)
    gains = h_parent - (nl / n) * _binary_entropy_vec(pl, nl) - (nr / n) * _binary_entropy_vec(pr, nr)
    split_info = _binary_entropy_vec(nl, np.full_like(nl, float(n)))
    ratios = gains / split_info
    keep = gains > GAIN_EPS
    if not keep.any():
        return None
    thresholds = (vs[positions - 1] + vs[positions]) / 2.0
    g, r, t = gains[keep], ratios[keep], thresholds[keep]
    best = np.lexsort((t, -g, -r))[0]
    return float(r[best]), float(g[best]), float(t[best])


def _make_leaf(pos: int, n: int) -> Leaf:
    label = 1 if 2 * pos > n else 0   # tie goes to the negative class
    purity = (pos if label else n - pos) / n
    return Leaf(label, n, purity)


def learn(dataset: Dataset, rule: StoppingRule) -> DecisionTree:
    """Grow a tree by recursive gain-ratio splitting.

    A partition becomes a leaf when it is pure, smaller than 2*m, or no
    threshold leaves both children with >= m instances and positive gain.
    Feature ties break lexicographically by name, then by the smaller
    threshold. Deterministic for a fixed dataset and rule.
    """
    m = rule.m
    y = np.asarray(dataset.labels, dtype=np.int64)
    columns = [(c.name, c.values) for c in dataset.columns]

    def grow(idx: np.ndarray) -> Node:
        n = idx.size
        pos = int(y[idx].sum())
        if pos in (0, n) or n < 2 * m:
            return _make_leaf(pos, n)
        best = None
        for name, values in columns:
            cand = _best_feature_split(values[idx], y[idx], m)
            if cand is None:
                continue
            ratio, gain, threshold = cand
            key = (-ratio, -gain, name, threshold)
            if best is None or key < best[0]:
                best = (key, name, threshold, values)
        if best is None:
            return _make_leaf(pos, n)
        _, name, threshold, values = best
        go_left = values[idx] <= threshold
        return Split(
            name,
            float(threshold),
            grow(idx[go_left]),
            grow(idx[~go_left]),
        )

    return DecisionTree(grow(np.arange(dataset.n_rows)))


def predict(tree: DecisionTree, row: Mapping[str, float]) -> int:
    """Descend thresholds (<= goes left); returns 1 for positive, 0 otherwise."""
    node = tree.root
    while isinstance(node, Split):
        if node.feature not in row:
            raise KeyError(f"row is missing feature {node.feature!r}")
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.label


def predict_dataset(tree: DecisionTree, dataset: Dataset) -> np.ndarray:
    """Vectorized predictions for every row of a Dataset."""
    out = np.empty(dataset.n_rows, dtype=np.int8)
    cols = {c.name: c.values for c in dataset.columns}

    def fill(node, idx):
        if isinstance(node, Leaf):
            out[idx] = node.label
            return
        if node.feature not in cols:
            raise KeyError(f"dataset is missing feature {node.feature!r}")
        go_left = cols[node.feature][idx] <= node.threshold
        fill(node.left, idx[go_left])
        fill(node.right, idx[~go_left])

    fill(tree.root, np.arange(dataset.n_rows))
    return out


def _label_text(label: int) -> str:
    return POSITIVE_LABEL if label else NEGATIVE_LABEL


def render(tree: DecisionTree) -> str:
    lines: list[str] = []

    def walk(node: Node, depth: int, condition: str):
        text = "|   " * depth + condition
        if isinstance(node, Leaf):
            lines.append(f"{text} :{_label_text(node.label)}")
        else:
            lines.append(text)
            t = format_number(node.threshold)
            walk(node.left, depth + 1, f"{node.feature} <= {t}")
            walk(node.right, depth + 1, f"{node.feature} > {t}")

    walk(tree.root, 0, "root")
    return "\n".join(lines)


_LINE_RE = re.compile(
    r"^(?P<indent>(\|   )*)"
    r"(?P<cond>root|(?P<feature>\S+) (?P<op><=|>) (?P<num>\S+))"
    r"(?: :(?P<label>\S+))?$"
)


def parse_render(text: str) -> DecisionTree:
    """Rebuild a structurally equivalent tree from rendered text.

    Leaf support/purity are not part of the text format and come back as
    1 / 1.0; structure, thresholds, and labels round-trip exactly.
    """
    parsed = []
    for lineno, raw in enumerate(text.strip("\n").split("\n"), start=1):
        match = _LINE_RE.match(raw.rstrip())
        if not match:
            raise ValueError(f"unparseable tree line {lineno}: {raw!r}")
        depth = len(match.group("indent")) // 4
        label = match.group("label")
        if label is not None and label not in (POSITIVE_LABEL, NEGATIVE_LABEL):
            raise ValueError(f"unknown leaf label {label!r} on line {lineno}")
        parsed.append(
            (
                depth,
                match.group("feature"),
                match.group("op"),
                float(match.group("num")) if match.group("num") else None,
                label,
            )
        )

    def build(i: int, depth: int):
        if i >= len(parsed) or parsed[i][0] != depth:
            raise ValueError(f"malformed tree text near line {i + 1}")
        _, _, _, _, label = parsed[i]
        if label is not None:
            return Leaf(1 if label == POSITIVE_LABEL else 0, 1, 1.0), i + 1
        left, j = build(i + 1, depth + 1)
        right, k = build(j, depth + 1)
        _, feature, op, num, _ = parsed[i + 1]
        _, rfeature, rop, rnum, _ = parsed[j]
        if op != "<=" or rop != ">" or feature != rfeature or num != rnum:
            raise ValueError(f"branch conditions disagree under line {i + 1}")
        return Split(feature, num, left, right), k

    root, consumed = build(0, 0)
    if consumed != len(parsed):
        raise ValueError("trailing tree lines after the root subtree")
    return DecisionTree(root)


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {
            "kind": "leaf",
            "label": _label_text(node.label),
            "support": node.support,
            "purity": node.purity,
        }
    return {
        "kind": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> Node:
    if data["kind"] == "leaf":
        return Leaf(
            1 if data["label"] == POSITIVE_LABEL else 0,
            int(data["support"]),
            float(data["purity"]),
        )
    return Split(
        data["feature"],
        float(data["threshold"]),
        _node_from_dict(data["left"]),
        _node_from_dict(data["right"]),
    )


def to_json(tree: DecisionTree) -> str:
    return json.dumps({"model": "threshold-tree", "root": _node_to_dict(tree.root)}, indent=2)


def from_json(text: str) -> DecisionTree:
    data = json.loads(text)
    return DecisionTree(_node_from_dict(data["root"]))

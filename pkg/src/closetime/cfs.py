"""Correlation-based feature subset selection.

Feature/class associations are symmetrical uncertainties computed on
MDL-discretized copies of each feature; subsets are scored by the merit
heuristic (high class correlation, low inter-feature correlation) and
searched best-first, halting after five consecutive expansions without
an improvement in the best merit seen.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .discretize import apply_cuts, entropy_from_counts, mdl_discretize
from .tabular import Dataset

STALE_FRONTIER_LIMIT = 5


def symmetrical_uncertainty(x, y) -> float:
    """2*[H(x)+H(y)-H(x,y)] / [H(x)+H(y)], or 0 when both entropies vanish."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = len(x)
    if n == 0:
        raise ValueError("empty input")
    hx = entropy_from_counts(Counter(x.tolist()).values(), n)
    hy = entropy_from_counts(Counter(y.tolist()).values(), n)
    if hx + hy == 0.0:
        return 0.0
    hxy = entropy_from_counts(Counter(zip(x.tolist(), y.tolist())).values(), n)
    return 2.0 * (hx + hy - hxy) / (hx + hy)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric feature-feature correlations plus a feature-class vector."""

    names: tuple[str, ...]
    feature_feature: np.ndarray
    feature_class: np.ndarray

    def __post_init__(self):
        ff = np.asarray(self.feature_feature, dtype=float)
        fc = np.asarray(self.feature_class, dtype=float)
        k = len(self.names)
        if ff.shape != (k, k) or fc.shape != (k,):
            raise ValueError("matrix shapes inconsistent with names")
        if not np.allclose(ff, ff.T):
            raise ValueError("feature_feature must be symmetric")
        if ((ff < -1e-9) | (ff > 1 + 1e-9)).any() or ((fc < -1e-9) | (fc > 1 + 1e-9)).any():
            raise ValueError("correlations must lie in [0,1]")
        object.__setattr__(self, "feature_feature", ff)
        object.__setattr__(self, "feature_class", fc)
        object.__setattr__(self, "names", tuple(self.names))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def to_csv(self) -> str:
        lines = ["feature," + ",".join(self.names) + ",class"]
        for i, name in enumerate(self.names):
            row = [f"{v!r}" for v in self.feature_feature[i]]
            lines.append(f"{name}," + ",".join(row) + f",{self.feature_class[i]!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SubsetScore:
    subset: frozenset[str]
    merit: float


def build_matrix(dataset: Dataset) -> CorrelationMatrix:
    """Discretize every feature, then correlate features with each other
    and with the class. The diagonal is fixed at 1."""
    binned = []
    for col in dataset.columns:
        cuts = mdl_discretize(col.values, dataset.labels, feature=col.name)
        binned.append(apply_cuts(col.values, cuts))
    k = len(binned)
    ff = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r = symmetrical_uncertainty(binned[i], binned[j])
            ff[i, j] = ff[j, i] = r
    fc = np.array(
        [symmetrical_uncertainty(b, dataset.labels) for b in binned]
    )
    return CorrelationMatrix(tuple(dataset.feature_names), ff, fc)


def merit(subset: Iterable[str], corr: CorrelationMatrix) -> float:
    """k*mean(r_cf) / sqrt(k + k(k-1)*mean(r_ff)) over the subset."""
    idx = sorted(corr.index(name) for name in set(subset))
    k = len(idx)
    if k == 0:
        raise ValueError("merit of an empty subset is undefined")
    mean_cf = float(np.mean(corr.feature_class[idx]))
    if k == 1:
        return mean_cf
    pair_sum = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            pair_sum += corr.feature_feature[idx[a], idx[b]]
    mean_ff = pair_sum / (k * (k - 1) / 2)
    return k * mean_cf / math.sqrt(k + k * (k - 1) * mean_ff)


def best_subset(dataset: Dataset) -> SubsetScore:
    """Best-first search over feature subsets.

    The open list is unlimited; expansion order is by merit with
    lexicographic tie-breaking, and the search halts once five consecutive
    expansions fail to raise the best merit seen. If everything scores 0
    the single feature with the largest class correlation is returned so
    downstream learners always get at least one column.
    """
    if dataset.n_rows == 0:
        raise ValueError("cannot select features from an empty dataset")
    corr = build_matrix(dataset)
    names = sorted(corr.names)

    scored: dict[tuple[str, ...], float] = {}
    heap: list[tuple[float, tuple[str, ...]]] = []
    best_key: tuple[str, ...] | None = None
    best_merit = -math.inf

    def score(key: tuple[str, ...]) -> bool:
        nonlocal best_key, best_merit
        m = merit(key, corr)
        scored[key] = m
        heapq.heappush(heap, (-m, key))
        if m > best_merit:
            best_merit = m
            best_key = key
            return True
        return False

    for name in names:
        score((name,))

    expanded: set[tuple[str, ...]] = set()
    stale = 0
    while heap and stale < STALE_FRONTIER_LIMIT:
        _, key = heapq.heappop(heap)
        if key in expanded:
            continue
        expanded.add(key)
        improved = False
        members = set(key)
        for name in names:
            if name in members:
                continue
            child = tuple(sorted(members | {name}))
            if child in scored:
                continue
            if score(child):
                improved = True
        stale = 0 if improved else stale + 1

    if best_merit <= 0.0:
        best_cf = max(corr.feature_class[corr.index(n)] for n in names)
        fallback = min(n for n in names if corr.feature_class[corr.index(n)] == best_cf)
        return SubsetScore(frozenset({fallback}), float(best_cf))
    return SubsetScore(frozenset(best_key), best_merit)


def select(dataset: Dataset) -> set[str]:
    """Chosen feature names (never empty)."""
    return set(best_subset(dataset).subset)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closetime.discretize import (
    CutPoints,
    apply_cuts,
    entropy,
    mdl_discretize,
)

# ---------------------------------------------------------------------------
# independent oracle: plain-python recursive MDLP over all adjacent-distinct
# midpoints, tracking (cut, gain, threshold) at every acceptance


def oracle_entropy(labels):
    n = len(labels)
    h = 0.0
    for v in set(labels):
        p = labels.count(v) / n
        h -= p * math.log2(p)
    return h


def oracle_candidates(pairs):
    """(index, midpoint) cuts between every adjacent pair of distinct values."""
    out = []
    for i in range(1, len(pairs)):
        if pairs[i][0] > pairs[i - 1][0]:
            out.append((i, (pairs[i][0] + pairs[i - 1][0]) / 2))
    return out


def oracle_best_cut(pairs):
    """Exhaustive weighted-child-entropy minimizer, smallest threshold wins."""
    n = len(pairs)
    best, best_score = None, math.inf
    for i, mid in oracle_candidates(pairs):
        left = [y for _, y in pairs[:i]]
        right = [y for _, y in pairs[i:]]
        score = len(left) / n * oracle_entropy(left) + len(right) / n * oracle_entropy(right)
        if score < best_score:
            best, best_score = (i, mid), score
    return best


def oracle_mdlp_test(pairs, i):
    labels = [y for _, y in pairs]
    left, right = labels[:i], labels[i:]
    n = len(labels)
    gain = (
        oracle_entropy(labels)
        - len(left) / n * oracle_entropy(left)
        - len(right) / n * oracle_entropy(right)
    )
    k, k1, k2 = len(set(labels)), len(set(left)), len(set(right))
    delta = math.log2(3**k - 2) - (
        k * oracle_entropy(labels) - k1 * oracle_entropy(left) - k2 * oracle_entropy(right)
    )
    return gain, (math.log2(n - 1) + delta) / n


def oracle_mdlp_cuts(values, labels):
    pairs = sorted(zip(values, labels), key=lambda p: p[0])

    def recurse(pairs):
        if len(pairs) < 2 or len({y for _, y in pairs}) < 2:
            return []
        found = oracle_best_cut(pairs)
        if found is None:
            return []
        i, mid = found
        gain, threshold = oracle_mdlp_test(pairs, i)
        if gain <= threshold:
            return []
        return [mid] + recurse(pairs[:i]) + recurse(pairs[i:])

    return sorted(recurse(pairs))


# ---------------------------------------------------------------------------


class TestEntropy:
    def test_pure(self):
        assert entropy([1, 1, 1, 1]) == 0.0

    def test_uniform_binary(self):
        assert entropy([1, 0]) == 1.0

    def test_two_one_split(self):
        expected = -(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3)
        assert entropy([1, 1, 0]) == pytest.approx(expected, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            entropy([])

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=30))
    def test_range_and_permutation_invariance(self, labels):
        h = entropy(labels)
        assert 0.0 <= h <= 1.0 + 1e-12
        assert entropy(list(reversed(labels))) == h

    @given(st.integers(1, 20))
    def test_maximal_at_even_split(self, k):
        assert entropy([0] * k + [1] * k) == pytest.approx(1.0)
        if k > 1:
            assert entropy([0] * (k - 1) + [1] * (k + 1)) < 1.0


class TestMdlDiscretize:
    def test_constant_feature(self):
        cp = mdl_discretize([5, 5, 5, 5], [1, 0, 1, 0])
        assert cp.cuts == ()

    def test_clean_two_block_split(self):
        cp = mdl_discretize([1, 2, 3, 4], [0, 0, 1, 1])
        assert len(cp.cuts) == 1
        assert 2 < cp.cuts[0] < 3
        # brute force over the 3 candidate boundaries confirms the choice
        pairs = [(1, 0), (2, 0), (3, 1), (4, 1)]
        i, mid = oracle_best_cut(pairs)
        gain, threshold = oracle_mdlp_test(pairs, i)
        assert gain > threshold
        assert cp.cuts[0] == mid

    def test_interleaved_rejected(self):
        cp = mdl_discretize(list(range(1, 9)), [1, 0, 1, 0, 1, 0, 1, 0])
        assert cp.cuts == ()

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            mdl_discretize([1, 2], [1])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mdl_discretize([], [])

    def test_feature_name_carried(self):
        cp = mdl_discretize([1, 2, 3, 4], [0, 0, 1, 1], feature="width")
        assert cp.feature == "width"

    @given(
        st.lists(
            st.tuples(st.integers(0, 6), st.integers(0, 1)),
            min_size=1,
            max_size=14,
        ),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=120)
    def test_row_order_invariance(self, rows, shuffler):
        values = [v for v, _ in rows]
        labels = [y for _, y in rows]
        base = mdl_discretize(values, labels).cuts
        shuffled = rows[:]
        shuffler.shuffle(shuffled)
        assert mdl_discretize([v for v, _ in shuffled], [y for _, y in shuffled]).cuts == base

    @given(
        st.lists(
            st.tuples(st.integers(0, 8), st.integers(0, 1)),
            min_size=1,
            max_size=16,
        )
    )
    @settings(max_examples=200)
    def test_matches_recursive_oracle(self, rows):
        values = [float(v) for v, _ in rows]
        labels = [y for _, y in rows]
        assert list(mdl_discretize(values, labels).cuts) == oracle_mdlp_cuts(values, labels)

    def test_every_cut_strictly_between_observed_values(self, rng):
        values = rng.integers(0, 30, 60).astype(float)
        labels = (values > 14).astype(int) ^ (rng.random(60) < 0.1)
        cp = mdl_discretize(values, labels)
        distinct = np.unique(values)
        for c in cp.cuts:
            assert c not in distinct
            assert distinct.min() < c < distinct.max()


class TestApplyCuts:
    def test_no_cuts_single_bin(self):
        cp = CutPoints("f", ())
        assert list(apply_cuts([1, 5, 9], cp)) == [0, 0, 0]

    def test_simple_binning(self):
        cp = CutPoints("f", (2.5,))
        assert list(apply_cuts([1, 3], cp)) == [0, 1]

    def test_value_equal_to_cut_goes_right(self):
        cp = CutPoints("f", (2.5, 7.5))
        assert list(apply_cuts([2.5], cp)) == [1]

    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=20),
        st.lists(st.floats(-40, 40), min_size=0, max_size=4, unique=True),
    )
    def test_bins_in_range(self, values, raw_cuts):
        cp = CutPoints("f", tuple(sorted(raw_cuts)))
        bins = apply_cuts(values, cp)
        assert ((0 <= bins) & (bins <= len(cp.cuts))).all()
        # bin index equals the count of cuts at or below the value
        for v, b in zip(values, bins):
            assert b == sum(1 for c in cp.cuts if c <= v)


class TestCutPoints:
    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            CutPoints("f", (1.0, 1.0))
        with pytest.raises(ValueError):
            CutPoints("f", (2.0, 1.0))

    def test_n_bins(self):
        assert CutPoints("f", (1.0, 2.0)).n_bins == 3

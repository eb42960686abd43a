import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closetime.ingest import FEATURE_NAMES
from closetime.tabular import class_counts
from closetime.targets import THRESHOLD_DAYS, ThresholdSpec, binarize, drop_sticky

from conftest import make_record


class TestThresholdSpec:
    @pytest.mark.parametrize("days", THRESHOLD_DAYS)
    def test_valid_values(self, days):
        assert ThresholdSpec(days).days == days

    @pytest.mark.parametrize("days", [0, 2, 15, 365, -7])
    def test_out_of_set_rejected(self, days):
        with pytest.raises(ValueError):
            ThresholdSpec(days)


class TestDropSticky:
    def test_keeps_closed_in_order(self):
        records = [
            make_record(issue_id="a", lifetime_days=1.0),
            make_record(issue_id="b", lifetime_days=None),
            make_record(issue_id="c", lifetime_days=3.0),
            make_record(issue_id="d", lifetime_days=None),
            make_record(issue_id="e", lifetime_days=0.5),
        ]
        kept = drop_sticky(records)
        assert [r.issue_id for r in kept] == ["a", "c", "e"]

    def test_all_sticky_gives_empty(self):
        records = [make_record(issue_id=i, lifetime_days=None) for i in range(3)]
        assert drop_sticky(records) == []
        with pytest.raises(ValueError):
            binarize(drop_sticky(records), ThresholdSpec(7))

    def test_zero_lifetime_retained(self):
        records = [make_record(issue_id="z", lifetime_days=0.0)]
        kept = drop_sticky(records)
        assert len(kept) == 1
        assert kept[0].time_open_days == 0.0

    def test_idempotent(self):
        records = [
            make_record(issue_id=i, lifetime_days=None if i % 2 else 1.0)
            for i in range(6)
        ]
        once = drop_sticky(records)
        assert drop_sticky(once) == once


class TestBinarize:
    def test_boundary_inclusive(self):
        ds = binarize([make_record(lifetime_days=7.0)], ThresholdSpec(7))
        assert list(ds.labels) == [1]

    def test_just_over_boundary_negative(self):
        ds = binarize([make_record(lifetime_days=7.0001)], ThresholdSpec(7))
        assert list(ds.labels) == [0]

    def test_features_and_provenance_pass_through(self):
        r = make_record(
            project="camel",
            lifetime_days=2.0,
            nCommitsInProject=17,
            issueCleanedBodyLen=40,
        )
        ds = binarize([r], ThresholdSpec(1))
        assert ds.feature_names == FEATURE_NAMES
        assert ds.column("nCommitsInProject").values[0] == 17.0
        assert ds.column("issueCleanedBodyLen").values[0] == 40.0
        assert ds.provenance == ("camel",)
        assert list(ds.labels) == [0]   # 2 days > 1 day

    def test_sticky_input_rejected(self):
        with pytest.raises(ValueError, match="sticky"):
            binarize([make_record(lifetime_days=None)], ThresholdSpec(7))

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            binarize([], ThresholdSpec(7))


@settings(max_examples=40)
@given(
    st.lists(
        st.floats(min_value=0.0, max_value=400.0, allow_nan=False),
        min_size=1,
        max_size=40,
    )
)
def test_positive_counts_monotone_in_threshold(lifetimes):
    records = [
        make_record(issue_id=i, lifetime_days=d) for i, d in enumerate(lifetimes)
    ]
    positives = [
        class_counts(binarize(records, ThresholdSpec(days)))[0]
        for days in THRESHOLD_DAYS
    ]
    assert positives == sorted(positives)


@given(st.lists(st.integers(0, 300), min_size=1, max_size=20))
def test_binarize_never_alters_features(feature_values):
    records = [
        make_record(issue_id=i, lifetime_days=float(i), nCommitsByCreator=v)
        for i, v in enumerate(feature_values)
    ]
    for days in THRESHOLD_DAYS:
        ds = binarize(records, ThresholdSpec(days))
        assert list(ds.column("nCommitsByCreator").values) == [
            float(v) for v in feature_values
        ]

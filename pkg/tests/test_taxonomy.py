import pytest
from hypothesis import given, strategies as st

from rewardloop.errors import ValidationError
from rewardloop.taxonomy import (DIMENSIONS, FEEDBACK_TYPES, VOCABULARY,
                                 DimensionProfile, classify)


def test_fourteen_types():
    assert len(FEEDBACK_TYPES) == 14


def test_all_profiles_closed_and_nonempty():
    for name, profile in FEEDBACK_TYPES.items():
        for dim in DIMENSIONS:
            attrs = profile.get(dim)
            assert attrs, f"{name}.{dim} empty"
            assert attrs <= VOCABULARY[dim], f"{name}.{dim} outside vocabulary"


def test_classify_returns_table_entry():
    for name in FEEDBACK_TYPES:
        assert classify(name) is FEEDBACK_TYPES[name]


def test_classify_unknown_raises():
    with pytest.raises(ValidationError):
        classify("Applause")


class TestKnownRows:
    def test_behavior_pref(self):
        p = classify("BehaviorPref")
        assert p.d1 == {"evaluate"}
        assert p.d4 == {"relative"}
        assert p.d9 == {"exclusive"}
        assert p.d8 == {"binary", "discrete"}

    def test_demonstration_is_hypothetical_instruction(self):
        p = classify("Demonstration")
        assert p.d1 == {"instruct"}
        assert p.d3 == {"proactive"}
        assert p.d6 == {"hypothetical"}

    def test_gaze_is_implicit_without_intent(self):
        p = classify("Gaze")
        assert p.d1 == {"none"}
        assert p.d2 == {"implicit"}

    def test_critique_vs_shaping_expression(self):
        assert classify("Critique").d2 == {"explicit"}
        assert classify("Shaping").d2 == {"explicit", "implicit"}

    def test_feature_types_are_feature_level(self):
        for name in ("FeatureSelection", "FeatureSaliency", "GoalPref"):
            assert "feature" in classify(name).d5


class TestProfileOps:
    def test_constructor_rejects_unknown_attr(self):
        good = classify("Critique")
        with pytest.raises(ValidationError):
            DimensionProfile(**{**{d.lower(): good.get(d) for d in DIMENSIONS},
                               "d2": frozenset({"telepathic"})})

    def test_round_trip(self):
        for profile in FEEDBACK_TYPES.values():
            assert DimensionProfile.from_dict(profile.to_dict()) == profile

    def test_narrowed_subsets(self):
        p = classify("Critique")
        q = p.narrowed("D3", {"reactive"})
        assert q.d3 == {"reactive"}
        assert q.d8 == p.d8

    def test_narrowed_rejects_disjoint(self):
        p = classify("Demonstration")  # proactive-only
        with pytest.raises(ValidationError):
            p.narrowed("D3", {"reactive"})


@given(st.sampled_from(sorted(FEEDBACK_TYPES)), st.sampled_from(DIMENSIONS))
def test_narrowing_to_any_single_allowed_attr_is_valid(name, dim):
    profile = classify(name)
    for attr in profile.get(dim):
        narrowed = profile.narrowed(dim, {attr})
        assert narrowed.get(dim) == {attr}

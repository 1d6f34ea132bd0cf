"""Nine-dimension feedback taxonomy and the golden classification table.

Each dimension has a closed attribute vocabulary. A profile assigns every
dimension a nonempty attribute set; single-attribute sets are fixed
classifications, larger sets mean the type can take any of them.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

VOCABULARY: dict[str, frozenset[str]] = {
    "D1": frozenset({"evaluate", "instruct", "describe", "none"}),
    "D2": frozenset({"explicit", "implicit"}),
    "D3": frozenset({"proactive", "reactive"}),
    "D4": frozenset({"absolute", "relative"}),
    "D5": frozenset({"instance", "feature", "meta"}),
    "D6": frozenset({"actual", "hypothetical"}),
    "D7": frozenset({"state", "segment", "episode", "entire_behavior"}),
    "D8": frozenset({"binary", "discrete", "continuous"}),
    "D9": frozenset({"exclusive", "augmenting"}),
}

DIMENSIONS = tuple(sorted(VOCABULARY))


@dataclass(frozen=True)
class DimensionProfile:
    d1: frozenset[str]
    d2: frozenset[str]
    d3: frozenset[str]
    d4: frozenset[str]
    d5: frozenset[str]
    d6: frozenset[str]
    d7: frozenset[str]
    d8: frozenset[str]
    d9: frozenset[str]

    def __post_init__(self):
        for dim in DIMENSIONS:
            attrs = self.get(dim)
            object.__setattr__(self, dim.lower(), frozenset(attrs))
            attrs = self.get(dim)
            if not attrs:
                raise ValidationError(f"{dim} must have at least one attribute")
            unknown = attrs - VOCABULARY[dim]
            if unknown:
                raise ValidationError(f"unknown {dim} attributes: {sorted(unknown)}")

    def get(self, dim: str) -> frozenset[str]:
        return getattr(self, dim.lower())

    def to_dict(self) -> dict[str, list[str]]:
        return {dim: sorted(self.get(dim)) for dim in DIMENSIONS}

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionProfile":
        missing = [d for d in DIMENSIONS if d not in data]
        if missing:
            raise ValidationError(f"profile missing dimensions: {missing}")
        return cls(**{d.lower(): frozenset(data[d]) for d in DIMENSIONS})

    def narrowed(self, dim: str, attrs: set[str]) -> "DimensionProfile":
        """Restrict one dimension to a subset of its allowed attributes."""
        chosen = frozenset(attrs)
        if not chosen <= self.get(dim):
            raise ValidationError(f"{sorted(chosen)} not allowed for {dim}")
        fields = {d.lower(): self.get(d) for d in DIMENSIONS}
        fields[dim.lower()] = chosen
        return DimensionProfile(**fields)


def _profile(d1, d2, d3, d4, d5, d6, d7, d8, d9) -> DimensionProfile:
    return DimensionProfile(*(frozenset(s.split("|")) for s in (d1, d2, d3, d4, d5, d6, d7, d8, d9)))


# Transcription of the published classification table; changing any entry is
# a deliberate act and breaks the golden test.
FEEDBACK_TYPES: dict[str, DimensionProfile] = {
    "Critique": _profile(
        "evaluate", "explicit", "proactive|reactive", "absolute", "instance",
        "actual", "state|segment", "binary|discrete", "exclusive|augmenting"),
    "Shaping": _profile(
        "evaluate", "explicit|implicit", "proactive|reactive", "absolute", "instance",
        "actual", "state|segment|episode", "binary|discrete|continuous", "augmenting"),
    "BehaviorPref": _profile(
        "evaluate", "explicit", "proactive|reactive", "relative", "instance",
        "actual", "segment|episode", "binary|discrete", "exclusive"),
    "OutcomeRating": _profile(
        "evaluate", "explicit", "reactive", "absolute", "instance",
        "actual", "episode", "binary|discrete", "exclusive|augmenting"),
    "ActionAdvice": _profile(
        "instruct", "explicit", "reactive", "absolute", "instance",
        "actual", "state", "binary", "augmenting"),
    "Demonstration": _profile(
        "instruct", "explicit", "proactive", "absolute", "instance",
        "hypothetical", "state", "binary|continuous", "exclusive|augmenting"),
    "DemonstrationWithoutActions": _profile(
        "instruct", "implicit", "proactive", "absolute", "instance",
        "hypothetical", "state|segment", "discrete", "exclusive|augmenting"),
    "Correction": _profile(
        "instruct", "explicit|implicit", "proactive", "relative", "instance",
        "actual", "segment|episode", "discrete|continuous", "augmenting"),
    "FeatureSelection": _profile(
        "describe", "explicit|implicit", "proactive|reactive", "absolute", "feature",
        "actual", "state|segment|entire_behavior", "binary|discrete", "augmenting"),
    "FeatureSaliency": _profile(
        "describe", "explicit|implicit", "proactive|reactive", "absolute", "feature",
        "actual", "state|segment", "binary", "augmenting"),
    "GoalSpec": _profile(
        "describe", "explicit|implicit", "proactive|reactive", "absolute", "feature",
        "hypothetical", "state", "binary", "augmenting"),
    "GoalPref": _profile(
        "describe", "explicit|implicit", "proactive|reactive", "relative", "feature",
        "hypothetical", "state", "binary|discrete", "augmenting"),
    "Gaze": _profile(
        "none", "implicit", "reactive", "absolute", "instance",
        "actual", "segment|episode", "discrete", "augmenting"),
    "Reaction": _profile(
        "none", "implicit", "proactive", "absolute", "instance",
        "actual", "segment|episode", "discrete", "augmenting"),
}


def classify(feedback_type_id: str) -> DimensionProfile:
    try:
        return FEEDBACK_TYPES[feedback_type_id]
    except KeyError:
        raise ValidationError(f"unknown feedback type id {feedback_type_id!r}") from None

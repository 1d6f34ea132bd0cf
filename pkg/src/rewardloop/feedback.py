"""Typed feedback schema: targets, values, measurements, validated instances.

The wire/persistence record for an instance is a single line: a one-byte
format version, then tab-separated fields in the fixed order
(instance_id, source_id, timestamp, profile, targets, value, context),
complex fields JSON-encoded. See ``encode_instance``/``decode_instance``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import RecordParseError, ValidationError
from .taxonomy import DimensionProfile, classify

FORMAT_VERSION = "1"
CONTEXT_LENGTH = 6
N_FEATURES = 8


# ---------------------------------------------------------------------------
# Targets


@dataclass(frozen=True)
class Target:
    """Addressable subset of behavior.

    kind: one of state_action | segment | episode | feature_set | whole_behavior.
    """

    kind: str
    episode_id: str | None = None
    index: int | None = None          # state_action: transition index
    start: int | None = None          # segment: half-open range [start, stop)
    stop: int | None = None
    feature_indices: tuple[int, ...] | None = None
    cells: tuple[tuple[int, int], ...] | None = None  # optional feature-set mask
    policy_id: str | None = None      # whole_behavior
    hypothetical: bool = False        # human-authored rather than rolled out

    def __post_init__(self):
        if self.feature_indices is not None:
            object.__setattr__(self, "feature_indices",
                               tuple(int(i) for i in self.feature_indices))
        if self.cells is not None:
            object.__setattr__(self, "cells", tuple(tuple(c) for c in self.cells))
        self.validate()

    def validate(self) -> None:
        if self.kind == "state_action":
            if self.episode_id is None or self.index is None or self.index < 0:
                raise ValidationError("state_action target needs episode_id and index >= 0")
        elif self.kind == "segment":
            if self.episode_id is None or self.start is None or self.stop is None:
                raise ValidationError("segment target needs episode_id, start, stop")
            if not (0 <= self.start < self.stop):
                raise ValidationError(f"segment range [{self.start},{self.stop}) is empty")
        elif self.kind == "episode":
            if self.episode_id is None:
                raise ValidationError("episode target needs episode_id")
        elif self.kind == "feature_set":
            if not self.feature_indices:
                raise ValidationError("feature_set target needs at least one index")
            bad = [i for i in self.feature_indices if not 0 <= i < N_FEATURES]
            if bad:
                raise ValidationError(f"feature indices out of range [0,{N_FEATURES}): {bad}")
        elif self.kind == "whole_behavior":
            if not self.policy_id:
                raise ValidationError("whole_behavior target needs a policy snapshot id")
        else:
            raise ValidationError(f"unknown target kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for key in ("episode_id", "index", "start", "stop", "policy_id"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.feature_indices is not None:
            out["feature_indices"] = list(self.feature_indices)
        if self.cells is not None:
            out["cells"] = [list(c) for c in self.cells]
        if self.hypothetical:
            out["hypothetical"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Target":
        kwargs = dict(data)
        if "feature_indices" in kwargs:
            kwargs["feature_indices"] = tuple(kwargs["feature_indices"])
        if "cells" in kwargs:
            kwargs["cells"] = tuple(tuple(c) for c in kwargs["cells"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValidationError(f"bad target payload: {exc}") from None


def make_target(kind: str, **payload) -> Target:
    return Target(kind=kind, **payload)


def segment_target(episode_id: str, start: int, stop: int, hypothetical: bool = False) -> Target:
    return Target(kind="segment", episode_id=episode_id, start=start, stop=stop,
                  hypothetical=hypothetical)


# ---------------------------------------------------------------------------
# Feedback values


@dataclass(frozen=True)
class FeedbackValue:
    """Tagged union over the supported value domains.

    kind: binary | discrete | continuous | relation | instruction.
    ``groups`` encodes a relation as tie groups of target indices, best
    first; ``[[0], [1]]`` reads "target 0 preferred over target 1".
    """

    kind: str
    sign: int | None = None                 # binary: +1 / -1
    level: int | None = None                # discrete: 1..scale
    scale: int | None = None
    x: float | None = None                  # continuous: [-1, 1]
    groups: tuple[tuple[int, ...], ...] | None = None  # relation
    weight: float | None = None             # instruction: optimality in (0, 1]

    def __post_init__(self):
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        self.validate(n_targets=None)

    def validate(self, n_targets: int | None) -> list[str]:
        problems: list[str] = []
        if self.kind == "binary":
            if self.sign not in (-1, 1):
                problems.append("binary value must be +1 or -1")
        elif self.kind == "discrete":
            if self.scale is None or self.scale < 2:
                problems.append("discrete value needs scale K >= 2")
            elif self.level is None or not 1 <= self.level <= self.scale:
                problems.append(f"level {self.level} out of range [1,{self.scale}]")
        elif self.kind == "continuous":
            if self.x is None or not -1.0 <= self.x <= 1.0:
                problems.append("continuous value must lie in [-1, 1]")
        elif self.kind == "relation":
            idx = [i for g in (self.groups or ()) for i in g]
            if len(idx) < 2:
                problems.append("relation needs an order over >= 2 targets")
            if len(set(idx)) != len(idx):
                problems.append("relation order repeats a target")
            if n_targets is not None and sorted(idx) != list(range(n_targets)):
                problems.append("relation order must cover target indices exactly")
        elif self.kind == "instruction":
            if self.weight is None or not 0.0 < self.weight <= 1.0:
                problems.append("instruction weight must lie in (0, 1]")
        else:
            problems.append(f"unknown value kind {self.kind!r}")
        if n_targets is None and problems:
            raise ValidationError("; ".join(problems))
        return problems

    def numeric(self) -> float:
        """Scalar value rescaled to [-1, 1]; relations have no scalar."""
        if self.kind == "binary":
            return float(self.sign)
        if self.kind == "discrete":
            return 2.0 * (self.level - 1) / (self.scale - 1) - 1.0
        if self.kind == "continuous":
            return float(self.x)
        if self.kind == "instruction":
            return float(self.weight)
        raise ValidationError("relation values carry no scalar")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for key in ("sign", "level", "scale", "x", "weight"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        if self.groups is not None:
            out["groups"] = [list(g) for g in self.groups]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FeedbackValue":
        kwargs = dict(data)
        if "groups" in kwargs:
            kwargs["groups"] = tuple(tuple(g) for g in kwargs["groups"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValidationError(f"bad value payload: {exc}") from None


def binary(sign: int) -> FeedbackValue:
    return FeedbackValue(kind="binary", sign=sign)


def discrete(level: int, scale: int) -> FeedbackValue:
    return FeedbackValue(kind="discrete", level=level, scale=scale)


def continuous(x: float) -> FeedbackValue:
    return FeedbackValue(kind="continuous", x=float(x))


def relation(groups) -> FeedbackValue:
    return FeedbackValue(kind="relation", groups=tuple(tuple(g) for g in groups))


def instruction(weight: float) -> FeedbackValue:
    return FeedbackValue(kind="instruction", weight=float(weight))


PAIR_PREFERENCE = relation([[0], [1]])


# ---------------------------------------------------------------------------
# Measurements and feedback state


@dataclass(frozen=True)
class Measurement:
    """Raw interaction record: intrinsic widget values plus contextual variables."""

    intrinsic: dict[str, Any] = field(default_factory=dict)
    contextual: dict[str, Any] = field(default_factory=dict)
    timestamp: float = 0.0
    noop: bool = False

    def __post_init__(self):
        if not self.intrinsic and not self.noop:
            raise ValidationError("measurement needs intrinsic variables or the no-op marker")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"intrinsic": self.intrinsic, "contextual": self.contextual,
                               "timestamp": self.timestamp}
        if self.noop:
            out["noop"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Measurement":
        return cls(intrinsic=data.get("intrinsic", {}), contextual=data.get("contextual", {}),
                   timestamp=data.get("timestamp", 0.0), noop=data.get("noop", False))


@dataclass(frozen=True)
class HumanState:
    fatigue: float = 0.0
    knowledge: float = 1.0
    rationality: float = 10.0


@dataclass(frozen=True)
class InterfaceState:
    available_kinds: tuple[str, ...] = ()
    query_mode: str = "reactive"


@dataclass(frozen=True)
class AgentState:
    model_version: int = 0
    mean_uncertainty: float = 0.0


@dataclass(frozen=True)
class FeedbackState:
    human: HumanState = HumanState()
    interface: InterfaceState = InterfaceState()
    agent: AgentState = AgentState()


# ---------------------------------------------------------------------------
# Context encoding

CONTEXT_DEFAULTS = (0.0, 0.0, 0.5, 0.0, 0.0, 0.0)


def annotator_bucket(annotator_id: str) -> int:
    """Stable 16-bucket hash of an annotator id."""
    digest = hashlib.sha1(annotator_id.encode()).digest()
    return digest[0] % 16


def encode_context(contextual: dict[str, Any]) -> np.ndarray:
    """Fixed 6-vector: [response time, session time, self-confidence,
    skill answer, distinguishability answer, annotator bucket/16]."""
    rt = float(contextual.get("response_time_ms", 0.0))
    elapsed = float(contextual.get("session_elapsed_s", 0.0))
    vec = np.array([
        min(1.0, rt / 60000.0),
        min(1.0, elapsed / 3600.0),
        float(contextual.get("self_confidence", 0.5)),
        float(contextual.get("skill_answer", 0.0)),
        float(contextual.get("distinguishability_answer", 0.0)),
        annotator_bucket(str(contextual.get("annotator_id", ""))) / 16.0
        if "annotator_id" in contextual else 0.0,
    ])
    if not np.all(np.isfinite(vec)):
        raise ValidationError("context encoding has non-finite entries")
    return vec


# ---------------------------------------------------------------------------
# Feedback instance


@dataclass(frozen=True)
class FeedbackInstance:
    instance_id: str
    targets: tuple[Target, ...]
    value: FeedbackValue
    context: np.ndarray
    profile: DimensionProfile
    source_id: str = ""
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "context", np.asarray(self.context, dtype=float))

    @property
    def confidence(self) -> float:
        return float(self.context[2])

    @property
    def proactive(self) -> bool:
        # D3 can stay broad for types the taxonomy allows in either mode, so
        # the source suffix carries the realized origin (see translate).
        return (self.profile.d3 == frozenset({"proactive"})
                or self.source_id.endswith("/proactive"))


def validate_instance(inst: FeedbackInstance) -> list[str]:
    """All violated invariants; an empty list means the instance is valid."""
    problems: list[str] = []
    if not inst.targets:
        problems.append("instance needs at least one target")
    if inst.context.shape != (CONTEXT_LENGTH,) or not np.all(np.isfinite(inst.context)):
        problems.append(f"context must be a finite vector of length {CONTEXT_LENGTH}")
    problems.extend(inst.value.validate(n_targets=len(inst.targets)))
    if inst.value.kind == "relation":
        if len(inst.targets) < 2:
            problems.append("relative value requires >= 2 targets")
    elif len(inst.targets) != 1:
        problems.append("non-relative value requires exactly one target")
    problems.extend(_d8_violations(inst.value, inst.profile, len(inst.targets)))
    return problems


def _d8_violations(value: FeedbackValue, profile: DimensionProfile, n_targets: int) -> list[str]:
    d8 = profile.d8
    if value.kind in ("binary", "discrete", "continuous"):
        if value.kind not in d8:
            return [f"{value.kind} value not allowed by profile D8 {sorted(d8)}"]
    elif value.kind == "instruction":
        if not d8 & {"binary", "continuous"}:
            return [f"instruction value not allowed by profile D8 {sorted(d8)}"]
    elif value.kind == "relation":
        needed = {"binary", "discrete"} if n_targets == 2 else {"discrete"}
        if not d8 & needed:
            return [f"relation over {n_targets} targets not allowed by profile D8 {sorted(d8)}"]
    return []


def require_valid(inst: FeedbackInstance) -> FeedbackInstance:
    problems = validate_instance(inst)
    if problems:
        raise ValidationError("; ".join(problems))
    return inst


# ---------------------------------------------------------------------------
# Record codec

_FIELD_NAMES = ("instance_id", "source_id", "timestamp", "profile", "targets",
                "value", "context")


def encode_instance(inst: FeedbackInstance) -> bytes:
    fields = [
        FORMAT_VERSION,
        inst.instance_id,
        inst.source_id,
        repr(float(inst.timestamp)),
        json.dumps(inst.profile.to_dict(), sort_keys=True),
        json.dumps([t.to_dict() for t in inst.targets], sort_keys=True),
        json.dumps(inst.value.to_dict(), sort_keys=True),
        json.dumps([float(c) for c in inst.context]),
    ]
    return "\t".join(fields).encode()


def decode_instance(record: bytes) -> FeedbackInstance:
    text = record.decode(errors="replace").rstrip("\n")
    parts = text.split("\t")
    if not parts or parts[0] != FORMAT_VERSION:
        raise RecordParseError(f"unsupported format version {parts[0]!r}", offset=0)
    if len(parts) != 1 + len(_FIELD_NAMES):
        # truncated or over-long record; point at the end of what we got
        raise RecordParseError(
            f"expected {len(_FIELD_NAMES)} fields, got {len(parts) - 1}",
            offset=len(record))
    offsets = []
    pos = 0
    for p in parts:
        offsets.append(pos)
        pos += len(p.encode()) + 1

    def parse(i: int, fn):
        try:
            return fn(parts[i + 1])
        except (ValueError, ValidationError, json.JSONDecodeError) as exc:
            raise RecordParseError(f"bad field {_FIELD_NAMES[i]!r}: {exc}",
                                   offset=offsets[i + 1]) from None

    timestamp = parse(2, float)
    profile = parse(3, lambda s: DimensionProfile.from_dict(json.loads(s)))
    targets = parse(4, lambda s: tuple(Target.from_dict(d) for d in json.loads(s)))
    value = parse(5, lambda s: FeedbackValue.from_dict(json.loads(s)))
    context = parse(6, lambda s: np.array(json.loads(s), dtype=float))
    if context.shape != (CONTEXT_LENGTH,):
        raise RecordParseError("bad field 'context': wrong length", offset=offsets[7])
    return FeedbackInstance(instance_id=parts[1], source_id=parts[2], timestamp=timestamp,
                            profile=profile, targets=targets, value=value, context=context)


__all__ = [
    "Target", "FeedbackValue", "Measurement", "FeedbackState", "HumanState",
    "InterfaceState", "AgentState", "FeedbackInstance", "make_target",
    "segment_target", "binary", "discrete", "continuous", "relation",
    "instruction", "encode_context", "annotator_bucket", "validate_instance",
    "require_valid", "encode_instance", "decode_instance", "classify",
    "CONTEXT_LENGTH", "FORMAT_VERSION",
]

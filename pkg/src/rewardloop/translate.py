"""Translation from raw measurements to validated feedback instances.

Explicit interaction kinds are value-preserving re-typings of the widget
content; implicit kinds (verbal comments, reaction signals) run a small
parameterized classifier; meta answers contribute context only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import feedback as fb
from .errors import TranslationError, ValidationError
from .taxonomy import DimensionProfile, classify

INTERACTION_KINDS = (
    "CritiqueButton", "RatingSlider", "PairwiseChoice", "RankingList",
    "ActionAdvice", "Demonstration", "SegmentCorrection", "FeatureBrush",
    "VerbalComment", "ReactionSignal", "MetaAnswer",
)

EXPLICIT_KINDS = frozenset(INTERACTION_KINDS[:8])

PROACTIVE_MARK = "/proactive"


def load_lexicon() -> dict[str, int]:
    text = resources.files("rewardloop").joinpath("assets/lexicon.txt").read_text()
    lex: dict[str, int] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        word, sign = line.split("\t")
        lex[word] = int(sign)
    return lex


_LEXICON: dict[str, int] | None = None


def lexicon_sentiment(tokens: list[str]) -> int:
    """Sign of (#positive hits - #negative hits) over the fixed word list."""
    global _LEXICON
    if _LEXICON is None:
        _LEXICON = load_lexicon()
    score = sum(_LEXICON.get(t, 0) for t in tokens)
    return (score > 0) - (score < 0)


def threshold_signal(samples, theta: float, hysteresis: float,
                     previous: int = 0) -> tuple[int, float]:
    """Thresholded mean of a 1-D implicit signal.

    mean > theta -> +1, mean < -theta -> -1, else 0 (strict inequalities).
    A sign flip against a nonzero previous emission additionally needs
    |mean| > theta + hysteresis. Confidence is min(1, |mean|/theta).
    """
    samples = list(samples)
    if not samples:
        raise TranslationError("threshold_signal: empty sample list")
    if not theta > hysteresis >= 0:
        raise TranslationError("threshold_signal: need theta > hysteresis >= 0")
    mean = float(np.mean(samples))
    value = 0
    if mean > theta:
        value = 1
    elif mean < -theta:
        value = -1
    if value != 0 and previous != 0 and value == -previous and abs(mean) <= theta + hysteresis:
        value = 0
    return value, min(1.0, abs(mean) / theta)


@dataclass(frozen=True)
class TranslatorParams:
    """Parameters of the implicit translators; read-only after load."""

    reaction_theta: float = 0.5
    reaction_hysteresis: float = 0.05  # default 0.1 * theta
    demo_min_weight: float = 0.05


def load_params(path) -> TranslatorParams:
    """Key=value text file with the TranslatorParams field names."""
    values: dict[str, float] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw)
    return TranslatorParams(**values)


@dataclass
class Translation:
    """Output of one translation: zero or more instances plus the context."""

    instances: list[fb.FeedbackInstance] = field(default_factory=list)
    context: np.ndarray = None


def extract_context(m: fb.Measurement, fs: fb.FeedbackState) -> np.ndarray:
    return fb.encode_context(m.contextual)


def _require(m: fb.Measurement, *names):
    for name in names:
        if name not in m.intrinsic:
            raise TranslationError(f"measurement missing intrinsic variable {name!r}")
    return [m.intrinsic[n] for n in names]


def _targets(m: fb.Measurement, n_min: int = 1) -> list[fb.Target]:
    (raw,) = _require(m, "targets")
    targets = [fb.Target.from_dict(d) for d in raw]
    if len(targets) < n_min:
        raise TranslationError(f"kind requires at least {n_min} targets")
    return targets


def decompose_ranking(order: list[list[fb.Target]]) -> list[tuple[fb.Target, fb.Target, bool]]:
    """Pairwise decomposition of a ranking given as tie groups, best first.

    Every unordered pair appears exactly once, as (preferred, other, False)
    across groups or (a, b, True) within a tie group; k(k-1)/2 pairs total.
    """
    flat = [t for g in order for t in g]
    if len(flat) < 2:
        raise ValidationError("ranking needs at least 2 targets")
    seen = []
    for t in flat:
        if t in seen:
            raise ValidationError("ranking contains a duplicate target")
        seen.append(t)
    pairs: list[tuple[fb.Target, fb.Target, bool]] = []
    for gi, group in enumerate(order):
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                pairs.append((a, b, True))
            for later in order[gi + 1:]:
                for b in later:
                    pairs.append((a, b, False))
    return pairs


def _finalize(profile: DimensionProfile, proactive: bool) -> tuple[DimensionProfile, str]:
    """Narrow D3 to the realized engagement where the table allows both."""
    mode = "proactive" if proactive else "reactive"
    if mode in profile.d3 and len(profile.d3) > 1:
        profile = profile.narrowed("D3", {mode})
    return profile, (PROACTIVE_MARK if proactive else "")


def is_proactive_instance(inst: fb.FeedbackInstance) -> bool:
    return inst.source_id.endswith(PROACTIVE_MARK)


def translate_correction(original: fb.Target, corrected: fb.Target,
                         context: np.ndarray, instance_id: str,
                         source_id: str = "", timestamp: float = 0.0) -> fb.FeedbackInstance:
    """Relation instance stating corrected > original, with the Correction profile."""
    if original == corrected:
        raise ValidationError("correction must differ from the original target")
    return fb.require_valid(fb.FeedbackInstance(
        instance_id=instance_id,
        targets=(corrected, original),
        value=fb.relation([[0], [1]]),
        context=context,
        profile=classify("Correction"),
        source_id=source_id,
        timestamp=timestamp,
    ))


def translate(m: fb.Measurement, fs: fb.FeedbackState, kind: str,
              instance_id: str = "i0", source_id: str = "",
              params: TranslatorParams = TranslatorParams(),
              proactive: bool = False) -> Translation:
    """phi: (measurement, feedback state) -> (instances | context).

    ``instance_id`` seeds the emitted ids (ranking decompositions append a
    pair suffix and share it as provenance).
    """
    if kind not in INTERACTION_KINDS:
        raise TranslationError(f"unknown interaction kind {kind!r}")
    context = extract_context(m, fs)
    ts = m.timestamp
    out = Translation(context=context)

    def emit(targets, value, profile, ident=None, ctx=None):
        prof, mark = _finalize(profile, proactive)
        out.instances.append(fb.require_valid(fb.FeedbackInstance(
            instance_id=ident or instance_id, targets=tuple(targets), value=value,
            context=context if ctx is None else ctx, profile=prof,
            source_id=source_id + mark, timestamp=ts)))

    if kind == "CritiqueButton":
        (option,) = _require(m, "option")
        target = _targets(m)[0]
        emit([target], fb.binary(int(option)), classify("Critique"))

    elif kind == "RatingSlider":
        (widget,) = _require(m, "widget")
        target = _targets(m)[0]
        scale = m.intrinsic.get("scale")
        if scale is None:
            emit([target], fb.continuous(float(widget)), classify("Shaping"))
        elif target.kind == "episode":
            emit([target], fb.discrete(int(widget), int(scale)), classify("OutcomeRating"))
        else:
            emit([target], fb.discrete(int(widget), int(scale)), classify("Critique"))

    elif kind == "PairwiseChoice":
        targets = _targets(m, 2)
        if len(targets) != 2:
            raise TranslationError("pairwise choice needs exactly 2 targets")
        if m.intrinsic.get("tie"):
            emit(targets, fb.relation([[0, 1]]), classify("BehaviorPref"))
        else:
            (choice,) = _require(m, "choice_index")
            choice = int(choice)
            if choice not in (0, 1):
                raise TranslationError("choice_index must be 0 or 1")
            emit(targets, fb.relation([[choice], [1 - choice]]), classify("BehaviorPref"))

    elif kind == "RankingList":
        targets = _targets(m, 2)
        raw_order = m.intrinsic.get("order")
        groups = ([[targets[i] for i in g] for g in raw_order]
                  if raw_order is not None else [[t] for t in targets])
        for n, (a, b, tie) in enumerate(decompose_ranking(groups)):
            value = fb.relation([[0, 1]] if tie else [[0], [1]])
            emit([a, b], value, classify("BehaviorPref"), ident=f"{instance_id}.p{n}")

    elif kind in ("ActionAdvice", "SegmentCorrection"):
        targets = _targets(m, 2)
        original, corrected = targets[0], targets[1]
        prof, mark = _finalize(classify("Correction"), proactive)
        out.instances.append(translate_correction(
            original, corrected, context, instance_id, source_id + mark, ts))

    elif kind == "Demonstration":
        target = _targets(m)[0]
        weight = float(m.intrinsic.get("optimality", 1.0))
        knowledge = fs.human.knowledge
        if knowledge < 1.0:
            weight *= knowledge
        weight = max(weight, params.demo_min_weight)
        emit([target], fb.instruction(min(weight, 1.0)), classify("Demonstration"))

    elif kind == "FeatureBrush":
        (indices,) = _require(m, "feature_indices")
        sign = int(m.intrinsic.get("sign", 1))
        target = fb.make_target("feature_set", feature_indices=tuple(indices),
                                cells=tuple(map(tuple, m.intrinsic.get("cells", ()))) or None)
        emit([target], fb.binary(sign), classify("FeatureSelection"))

    elif kind == "VerbalComment":
        (tokens,) = _require(m, "tokens")
        sentiment = lexicon_sentiment(list(tokens))
        if sentiment != 0:
            target = _targets(m)[0]
            emit([target], fb.discrete(2 + sentiment, 3), classify("Shaping"))

    elif kind == "ReactionSignal":
        (samples,) = _require(m, "samples")
        value, confidence = threshold_signal(samples, params.reaction_theta,
                                             params.reaction_hysteresis,
                                             previous=int(m.intrinsic.get("previous", 0)))
        if value != 0:
            target = _targets(m)[0]
            ctx = context.copy()
            ctx[2] = confidence  # classifier confidence stands in for self-report
            emit([target], fb.discrete(2 + value, 3), classify("Reaction"), ctx=ctx)

    elif kind == "MetaAnswer":
        pass  # context only, never a reward-bearing instance

    if kind == "MetaAnswer" and out.instances:
        raise AssertionError("meta answers must not produce instances")
    return out

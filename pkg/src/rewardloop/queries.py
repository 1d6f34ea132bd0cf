"""Target selection (query proposal), feedback-type scheduling, and the
merge of proactive feedback into the work queue."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import ReplayBuffer
from .errors import SpecificationError, UsageError
from .feedback import FeedbackState, Measurement, Target
from .model import Ensemble, preference_likelihood, uncertainty
from .oracle import Query

STRATEGY_TAGS = ("UniformRandom", "EnsembleDisagreement", "InfoGainGreedy")


@dataclass(frozen=True)
class QueryStrategy:
    tag: str = "UniformRandom"
    pool_size: int = 64
    segment_len: int = 8

    def __post_init__(self):
        if self.tag not in STRATEGY_TAGS:
            raise SpecificationError(f"unknown strategy {self.tag!r}")
        if self.pool_size < 1 or self.segment_len < 1:
            raise SpecificationError("pool_size and segment_len must be >= 1")


def candidate_segments(buffer: ReplayBuffer, segment_len: int) -> list[Target]:
    """Non-overlapping chunks of each episode, clipped at the episode end,
    in deterministic (episode_id, start) order."""
    segments: list[Target] = []
    for eid in sorted(buffer.episodes):
        n = len(buffer.episodes[eid].transitions)
        for start in range(0, n, segment_len):
            segments.append(Target(kind="segment", episode_id=eid, start=start,
                                   stop=min(start + segment_len, n)))
    return segments


def _segment_key(t: Target):
    return (t.episode_id, t.start, t.stop)


def propose_queries(buffer: ReplayBuffer, ensemble: Ensemble,
                    strategy: QueryStrategy, k: int, seed: int = 0) -> list[Query]:
    """k segment-pair queries; deterministic given (buffer, ensemble, seed).

    Scoring ties break by (episode_id, range) order of the pair.
    """
    if not buffer.episodes or all(not e.transitions for e in buffer.episodes.values()):
        raise UsageError("cannot propose queries from an empty buffer")
    if k < 1:
        raise UsageError("k must be >= 1")
    segments = candidate_segments(buffer, strategy.segment_len)
    pairs = [(a, b) for i, a in enumerate(segments) for b in segments[i + 1:]]
    if not pairs:
        return []
    rng = np.random.default_rng([seed, 23])
    if len(pairs) > strategy.pool_size:
        idx = rng.choice(len(pairs), size=strategy.pool_size, replace=False)
        pool = [pairs[i] for i in sorted(idx)]
    else:
        pool = pairs

    if strategy.tag == "UniformRandom":
        order = rng.permutation(len(pool))
        chosen = [pool[i] for i in order[:k]]
    else:
        if strategy.tag == "EnsembleDisagreement":
            scores = [uncertainty(ensemble, a, buffer) + uncertainty(ensemble, b, buffer)
                      for a, b in pool]
        else:  # InfoGainGreedy: variance of member preference likelihoods
            scores = []
            for a, b in pool:
                ps = [preference_likelihood(m, a, b, buffer) for m in ensemble.members]
                scores.append(float(np.var(ps)))
        ranked = sorted(range(len(pool)),
                        key=lambda i: (-scores[i], _segment_key(pool[i][0]),
                                       _segment_key(pool[i][1])))
        # greedy diversity: a segment appears at most once per batch, so the
        # top score cannot spend the whole budget on near-duplicate pairs
        chosen, used = [], set()
        for i in ranked:
            a, b = pool[i]
            if _segment_key(a) in used or _segment_key(b) in used:
                continue
            chosen.append(pool[i])
            used.update((_segment_key(a), _segment_key(b)))
            if len(chosen) == k:
                break
        for i in ranked:  # fill from the ranking if diversity ran dry
            if len(chosen) == k:
                break
            if pool[i] not in chosen:
                chosen.append(pool[i])
    return [Query(query_id=f"q{seed}-{n}", kind="PairwiseChoice", targets=list(pair))
            for n, pair in enumerate(chosen)]


@dataclass(frozen=True)
class ScheduleRules:
    """Feedback-type rule table; a deliberate placeholder extension point."""

    fatigue_threshold: float = 0.7
    uncertainty_threshold: float = 0.5
    knowledge_threshold: float = 0.5


def schedule_type(query: Query, fs: FeedbackState,
                  rules: ScheduleRules = ScheduleRules()) -> str:
    if fs.human.fatigue > rules.fatigue_threshold:
        return "PairwiseChoice"  # cheapest interaction under fatigue
    if (fs.agent.mean_uncertainty > rules.uncertainty_threshold
            and fs.human.knowledge > rules.knowledge_threshold):
        return "Demonstration"
    if any(t.kind == "feature_set" for t in query.targets):
        return "FeatureBrush"
    return "RatingSlider"


@dataclass
class WorkItem:
    """One unit of annotation work: a pending query, or an already-made
    proactive measurement."""

    proactive: bool
    query: Query | None = None
    measurement: Measurement | None = None
    target_keys: frozenset[str] = field(default_factory=frozenset)


def _keys_of_targets(dicts) -> frozenset[str]:
    return frozenset(json.dumps(d, sort_keys=True) for d in dicts)


def merge_proactive(reactive: list[Query], proactive: list[Measurement]) -> list[WorkItem]:
    """Proactive measurements go first; a reactive query on a target already
    covered proactively collapses into the proactive entry."""
    queue: list[WorkItem] = []
    covered: set[str] = set()
    for m in proactive:
        keys = _keys_of_targets(m.intrinsic.get("targets", []))
        covered |= keys
        queue.append(WorkItem(proactive=True, measurement=m, target_keys=keys))
    for q in reactive:
        keys = _keys_of_targets(t.to_dict() for t in q.targets)
        if keys & covered:
            continue
        queue.append(WorkItem(proactive=False, query=q, target_keys=keys))
    return queue

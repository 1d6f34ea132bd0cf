"""Simulated annotators answering queries from a hidden true reward.

Choice queries follow the Boltzmann-rational model (probability
proportional to exp(beta * true value)); value queries emit the true value
plus asymmetry bias, linear drift, and Gaussian noise, with an optional
mislabel flip to a uniform-random legal value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid
from .dataset import ReplayBuffer
from .errors import SpecificationError, UsageError
from .feedback import Measurement, Target

SALIENCE_PERCENTILE = 90.0
PROACTIVE_SEGMENT_LEN = 8


@dataclass(frozen=True)
class OracleConfig:
    rationality: float = 10.0        # beta
    deterministic: bool = False      # beta -> infinity as argmax, no overflow
    noise_sigma: float = 0.0
    mislabel_prob: float = 0.0
    asymmetry_bias: float = 0.0
    drift_per_step: float = 0.0
    availability: float = 0.0
    skill: float = 1.0
    annotator_id: str = "oracle"
    seed: int = 0

    def __post_init__(self):
        if self.rationality < 0 or self.noise_sigma < 0:
            raise SpecificationError("rationality and noise_sigma must be >= 0")
        if not 0.0 <= self.mislabel_prob <= 1.0:
            raise SpecificationError("mislabel_prob must lie in [0, 1]")
        if not 0.0 <= self.availability <= 1.0:
            raise SpecificationError("availability must lie in [0, 1]")
        if not 0.0 <= self.skill <= 1.0:
            raise SpecificationError("skill must lie in [0, 1]")


@dataclass
class Query:
    query_id: str
    kind: str
    targets: list[Target]
    proactive: bool = False


@dataclass
class Oracle:
    """One simulated annotator; owns its rng and session step counter."""

    cfg: OracleConfig
    buffer: ReplayBuffer
    rng: np.random.Generator = field(default=None)
    steps: int = 0

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng([self.cfg.seed, 17])

    # -- helpers -----------------------------------------------------------

    def _true(self, target: Target) -> float:
        return self.buffer.true_value(target)

    def _choose(self, values: np.ndarray) -> int:
        if self.cfg.deterministic:
            return int(np.argmax(values))
        logits = self.cfg.rationality * (values - values.max())
        probs = np.exp(logits)
        probs /= probs.sum()
        return int(self.rng.choice(len(values), p=probs))

    def _contextual(self) -> dict:
        self.steps += 1
        return {
            "response_time_ms": round(500.0 + 2000.0 * (1.0 - self.cfg.skill), 3),
            "session_elapsed_s": float(self.steps),
            "annotator_id": self.cfg.annotator_id,
            "skill_answer": 1 if self.cfg.skill > 0.66 else (-1 if self.cfg.skill < 0.33 else 0),
        }

    def _emit_value(self, true_value: float) -> float:
        v = true_value + self.cfg.asymmetry_bias + self.cfg.drift_per_step * self.steps
        if self.cfg.noise_sigma > 0:
            v += self.rng.normal(0.0, self.cfg.noise_sigma)
        return v

    # -- operations --------------------------------------------------------

    def respond(self, query: Query) -> Measurement:
        """Answer one query; always yields a measurement the translators accept."""
        kind, targets = query.kind, query.targets
        target_dicts = [t.to_dict() for t in targets]
        ctx = self._contextual()

        if kind in ("PairwiseChoice", "RankingList"):
            if len(targets) < 2:
                raise UsageError(f"{kind} needs a choice set of >= 2 targets")
            values = np.array([self._true(t) for t in targets])
            if kind == "PairwiseChoice":
                choice = self._choose(values)
                if self.rng.random() < self.cfg.mislabel_prob:
                    choice = int(self.rng.integers(2))
                intrinsic = {"targets": target_dicts, "choice_index": choice}
            else:
                order = self._sample_ranking(values)
                intrinsic = {"targets": target_dicts, "order": [[i] for i in order]}
            return Measurement(intrinsic=intrinsic, contextual=ctx)

        if kind == "ActionAdvice":
            if len(targets) != 1:
                raise UsageError("ActionAdvice expects one state-action target")
            (t,) = self.buffer.transitions_for(targets[0])
            values = np.array([
                grid.true_reward(self.buffer.spec, t.state, a) for a in grid.ACTIONS])
            advised = grid.ACTIONS[self._choose(values)]
            intrinsic = {"targets": target_dicts, "advised_action": advised,
                         "taken_action": t.action}
            return Measurement(intrinsic=intrinsic, contextual=ctx)

        if kind in ("CritiqueButton", "RatingSlider"):
            if len(targets) != 1:
                raise UsageError(f"{kind} expects one target")
            v = self._emit_value(self._true(targets[0]))
            if kind == "CritiqueButton":
                option = 1 if v >= 0 else -1
                if self.rng.random() < self.cfg.mislabel_prob:
                    option = 1 if self.rng.random() < 0.5 else -1
                intrinsic = {"targets": target_dicts, "option": option}
            else:
                widget = float(np.clip(v, -1.0, 1.0))
                if self.rng.random() < self.cfg.mislabel_prob:
                    widget = float(self.rng.uniform(-1.0, 1.0))
                intrinsic = {"targets": target_dicts, "widget": widget, "scale": None}
            return Measurement(intrinsic=intrinsic, contextual=ctx)

        if kind == "FeatureBrush":
            if len(targets) != 1 or targets[0].kind != "feature_set":
                raise UsageError("FeatureBrush expects one feature_set target")
            idx = list(targets[0].feature_indices)
            weights = self.buffer.spec.true_weights
            mean_w = float(np.mean([weights[i] for i in idx]))
            sign = 1 if self._emit_value(mean_w) >= 0 else -1
            intrinsic = {"feature_indices": idx, "sign": sign, "targets": target_dicts}
            return Measurement(intrinsic=intrinsic, contextual=ctx)

        if kind == "MetaAnswer":
            self.steps += 1
            return Measurement(intrinsic={"meta": True},
                               contextual={**ctx,
                                           "distinguishability_answer":
                                               1 if self.cfg.skill > 0.5 else 0})

        raise UsageError(f"oracle cannot answer interaction kind {kind!r}")

    def _sample_ranking(self, values: np.ndarray) -> list[int]:
        """Plackett-Luce sampling by repeated Boltzmann choice without replacement."""
        remaining = list(range(len(values)))
        order: list[int] = []
        while remaining:
            pick = self._choose(values[remaining])
            order.append(remaining.pop(pick))
        return order

    def demonstrate(self, start: grid.EnvState, horizon: int,
                    truth=None) -> Measurement:
        """Action sequence sampled from the Boltzmann policy over optimal Q values."""
        if horizon < 1:
            raise UsageError("horizon must be >= 1")
        spec = self.buffer.spec
        fn = truth or (lambda s, a: grid.true_reward(spec, s, a))
        table = grid.optimal_values(spec, fn, gamma=0.95)
        beta_eff = self.cfg.rationality * self.cfg.skill
        state = start
        actions: list[str] = []
        for _ in range(horizon):
            if state.done_flag:
                break
            q = np.array([
                table.gamma * (fn(state, a)
                               + table.values[grid.move(spec, state.agent_cell, a)[0]])
                for a in grid.ACTIONS])
            if self.cfg.deterministic and self.cfg.skill >= 1.0:
                pick = int(np.argmax(q))
            else:
                logits = beta_eff * (q - q.max())
                probs = np.exp(logits)
                probs /= probs.sum()
                pick = int(self.rng.choice(len(q), p=probs))
            action = grid.ACTIONS[pick]
            actions.append(action)
            state = grid.step(spec, state, action).next_state
        ctx = self._contextual()
        return Measurement(
            intrinsic={"actions": actions, "start_cell": list(start.agent_cell),
                       "optimality": max(self.cfg.skill, 0.05)},
            contextual=ctx)

    def proactive_emit(self, episode: grid.Episode) -> list[Measurement]:
        """Unprompted critiques on salient segments (|mean true reward| above the
        90th percentile of the episode's segment saliences, strictly)."""
        spec = self.buffer.spec
        n = len(episode.transitions)
        if n == 0 or self.cfg.availability == 0.0:
            return []
        bounds = [(s, min(s + PROACTIVE_SEGMENT_LEN, n))
                  for s in range(0, n, PROACTIVE_SEGMENT_LEN)]
        saliences = np.array([
            abs(np.mean([grid.transition_reward(spec, t)
                         for t in episode.transitions[a:b]]))
            for a, b in bounds])
        cut = float(np.percentile(saliences, SALIENCE_PERCENTILE))
        out: list[Measurement] = []
        for (a, b), sal in zip(bounds, saliences):
            if sal <= cut:
                continue
            if self.rng.random() >= self.cfg.availability:
                continue
            target = Target(kind="segment", episode_id=episode.episode_id, start=a, stop=b)
            value = np.mean([grid.transition_reward(spec, t)
                             for t in episode.transitions[a:b]])
            out.append(Measurement(
                intrinsic={"targets": [target.to_dict()],
                           "option": 1 if value >= 0 else -1},
                contextual={**self._contextual(), "proactive": True}))
        return out

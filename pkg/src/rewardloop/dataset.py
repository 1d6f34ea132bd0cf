"""Replay buffer: episodes, policy snapshot attribution, target resolution.

Targets resolve to row matrices of transition features; segment, episode
and whole-behavior targets aggregate by the mean of their per-step rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import ResolutionError
from .feedback import Target


@dataclass
class ReplayBuffer:
    spec: grid.GridSpec
    episodes: dict[str, grid.Episode] = field(default_factory=dict)
    policy_episodes: dict[str, list[str]] = field(default_factory=dict)
    _feature_cache: dict = field(default_factory=dict, repr=False)

    def add_episode(self, episode: grid.Episode, policy_id: str | None = None) -> None:
        if episode.episode_id in self.episodes:
            raise ResolutionError(f"duplicate episode id {episode.episode_id!r}")
        self.episodes[episode.episode_id] = episode
        if policy_id is not None:
            self.policy_episodes.setdefault(policy_id, []).append(episode.episode_id)
        self._feature_cache.pop("baseline", None)

    def episode(self, episode_id: str) -> grid.Episode:
        try:
            return self.episodes[episode_id]
        except KeyError:
            raise ResolutionError(f"unknown episode {episode_id!r}") from None

    def policy_of(self, episode_id: str) -> str | None:
        for pid, ids in self.policy_episodes.items():
            if episode_id in ids:
                return pid
        return None

    def episode_features(self, episode_id: str) -> np.ndarray:
        key = ("ep", episode_id)
        if key not in self._feature_cache:
            ep = self.episode(episode_id)
            if not ep.transitions:
                raise ResolutionError(f"episode {episode_id!r} is empty")
            self._feature_cache[key] = np.stack([
                grid.featurize(self.spec, t.state, t.action) for t in ep.transitions])
        return self._feature_cache[key]

    def transitions_for(self, target: Target) -> list[grid.Transition]:
        if target.kind == "state_action":
            ep = self.episode(target.episode_id)
            if target.index >= len(ep.transitions):
                raise ResolutionError(f"transition index {target.index} outside episode")
            return [ep.transitions[target.index]]
        if target.kind == "segment":
            ep = self.episode(target.episode_id)
            if target.stop > len(ep.transitions):
                raise ResolutionError(
                    f"segment [{target.start},{target.stop}) outside episode of length "
                    f"{len(ep.transitions)}")
            return list(ep.transitions[target.start:target.stop])
        if target.kind == "episode":
            return list(self.episode(target.episode_id).transitions)
        if target.kind == "whole_behavior":
            ids = self.policy_episodes.get(target.policy_id)
            if not ids:
                raise ResolutionError(f"unknown policy snapshot {target.policy_id!r}")
            return [t for eid in ids for t in self.episode(eid).transitions]
        raise ResolutionError(f"target kind {target.kind!r} has no transitions")

    def features_for_target(self, target: Target) -> np.ndarray:
        """[n, 8] feature rows; the target's prediction is their mean prediction."""
        if target.kind == "feature_set":
            row = np.zeros(grid.N_FEATURES)
            row[list(target.feature_indices)] = 1.0
            return row[None, :]
        if target.kind == "state_action":
            ep = self.episode(target.episode_id)
            if target.index >= len(ep.transitions):
                raise ResolutionError(f"transition index {target.index} outside episode")
            return self.episode_features(target.episode_id)[target.index:target.index + 1]
        if target.kind == "segment":
            feats = self.episode_features(target.episode_id)
            if target.stop > feats.shape[0]:
                raise ResolutionError(
                    f"segment [{target.start},{target.stop}) outside episode of length "
                    f"{feats.shape[0]}")
            return feats[target.start:target.stop]
        if target.kind == "episode":
            return self.episode_features(target.episode_id)
        if target.kind == "whole_behavior":
            ids = self.policy_episodes.get(target.policy_id)
            if not ids:
                raise ResolutionError(f"unknown policy snapshot {target.policy_id!r}")
            return np.concatenate([self.episode_features(eid) for eid in ids])
        raise ResolutionError(f"unknown target kind {target.kind!r}")

    def baseline_features(self) -> np.ndarray:
        """All transition features in the buffer; the instruction-loss baseline."""
        if "baseline" not in self._feature_cache:
            mats = [self.episode_features(eid) for eid in sorted(self.episodes)
                    if self.episodes[eid].transitions]
            if not mats:
                raise ResolutionError("replay buffer holds no transitions")
            self._feature_cache["baseline"] = np.concatenate(mats)
        return self._feature_cache["baseline"]

    def true_value(self, target: Target,
                   reward_fn=None) -> float:
        """Mean true reward over a target's transitions (oracle-side only)."""
        fn = reward_fn or (lambda s, a: grid.true_reward(self.spec, s, a))
        ts = self.transitions_for(target)
        return float(np.mean([fn(t.state, t.action) for t in ts]))

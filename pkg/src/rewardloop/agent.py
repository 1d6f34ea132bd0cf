"""Tabular Q-learning agent optimizing either the true or the learned reward."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid, kernels
from .errors import DivergenceError, SpecificationError
from .model import Ensemble


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 1.0
    gamma: float = 0.95
    epsilon: float = 0.2
    episodes: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise SpecificationError("alpha must lie in (0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise SpecificationError("gamma must lie in (0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise SpecificationError("epsilon must lie in [0, 1]")
        if self.episodes < 1:
            raise SpecificationError("episodes must be >= 1")


def ensemble_mean_reward(ensemble: Ensemble, spec: grid.GridSpec):
    """State-action reward function given by the ensemble-mean prediction."""
    dim = ensemble.members[0].input_dim

    def fn(state: grid.EnvState, action: str) -> float:
        f = grid.featurize(spec, state, action)
        if dim > f.shape[0]:
            f = np.concatenate([f, np.zeros(dim - f.shape[0])])
        return float(np.mean([m.forward(f[None, :])[0] for m in ensemble.members]))

    return fn


@dataclass(frozen=True)
class TrainedPolicy:
    policy_table: dict[tuple[int, int], str]
    q_table: np.ndarray

    def policy(self) -> grid.Policy:
        return grid.tabular_policy(self.policy_table)


def train_q(spec: grid.GridSpec, reward_fn, config: AgentConfig) -> TrainedPolicy:
    """Epsilon-greedy tabular Q-learning; deterministic per seed.

    ``reward_fn`` is (state, action) -> reward; pass ``ensemble_mean_reward``
    to optimize a learned reward.
    """
    rewards, next_states, terminal = grid.build_tables(spec, reward_fn)
    q = kernels.q_learning(rewards, next_states, terminal,
                           grid.cell_index(spec, spec.start_cell),
                           config.gamma, config.alpha, config.epsilon,
                           config.episodes, spec.max_steps, config.seed)
    if not np.all(np.isfinite(q)):
        raise DivergenceError("Q-table diverged to non-finite values")
    table: dict[tuple[int, int], str] = {}
    for cell in [(x, y) for y in range(spec.height) for x in range(spec.width)
                 if (x, y) not in spec.wall_cells]:
        s = grid.cell_index(spec, cell)
        table[cell] = grid.ACTIONS[int(np.argmax(q[s]))]
    return TrainedPolicy(policy_table=table, q_table=q)


def evaluate(policy: grid.Policy, reward_fn, spec: grid.GridSpec,
             n_episodes: int, seed: int, gamma: float = 0.95) -> tuple[float, float]:
    """Mean and std of the discounted return of seeded rollouts under ``reward_fn``."""
    if n_episodes < 1:
        raise SpecificationError("n_episodes must be >= 1")
    returns = []
    for i in range(n_episodes):
        ep = grid.rollout(spec, policy, seed=int(np.random.default_rng([seed, i]).integers(2**31)))
        returns.append(grid.episode_return(spec, ep, reward_fn=reward_fn, gamma=gamma))
    return float(np.mean(returns)), float(np.std(returns))

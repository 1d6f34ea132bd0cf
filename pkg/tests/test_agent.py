import numpy as np
import pytest

from rewardloop import agent as ag
from rewardloop import grid
from rewardloop import metrics as mx
from rewardloop import model as M
from rewardloop.errors import SpecificationError


def true_fn(spec):
    return lambda s, a: grid.true_reward(spec, s, a)


class TestConfig:
    def test_domain_validation(self):
        for kw in ({"alpha": 0.0}, {"gamma": 1.0}, {"epsilon": -0.1},
                   {"episodes": 0}):
            with pytest.raises(SpecificationError):
                ag.AgentConfig(**kw)


class TestTraining:
    def test_converges_to_zero_regret_on_truth(self, small_spec):
        cfg = ag.AgentConfig(alpha=1.0, gamma=0.95, epsilon=0.3,
                             episodes=4000, seed=0)
        trained = ag.train_q(small_spec, true_fn(small_spec), cfg)
        assert mx.regret(trained.policy_table, small_spec, 0.95) == pytest.approx(
            0.0, abs=1e-8)

    def test_deterministic_per_seed(self, small_spec):
        cfg = ag.AgentConfig(episodes=500, seed=4)
        a = ag.train_q(small_spec, true_fn(small_spec), cfg)
        b = ag.train_q(small_spec, true_fn(small_spec), cfg)
        assert np.array_equal(a.q_table, b.q_table)

    def test_ensemble_mean_reward_is_member_mean(self, small_spec):
        ens = M.make_ensemble(size=3, seed=1)
        fn = ag.ensemble_mean_reward(ens, small_spec)
        state = grid.reset(small_spec)
        x = grid.featurize(small_spec, state, "right")
        want = float(np.mean([m.forward(x[None, :]) for m in ens.members]))
        assert fn(state, "right") == pytest.approx(want)


class TestEvaluate:
    def test_optimal_policy_matches_value(self, small_spec):
        table = grid.optimal_values(small_spec, true_fn(small_spec), gamma=0.95)
        mean, std = ag.evaluate(table.policy(), true_fn(small_spec), small_spec,
                                n_episodes=5, seed=0, gamma=0.95)
        assert std == pytest.approx(0.0)  # deterministic greedy policy
        assert mean == pytest.approx(table.value(small_spec.start_cell), abs=1e-9)

    def test_n_episodes_validated(self, small_spec):
        table = grid.optimal_values(small_spec, true_fn(small_spec), gamma=0.95)
        with pytest.raises(SpecificationError):
            ag.evaluate(table.policy(), true_fn(small_spec), small_spec,
                        n_episodes=0, seed=0)

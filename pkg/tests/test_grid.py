import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rewardloop import grid
from rewardloop.errors import SpecificationError, UsageError


class TestSpecValidation:
    def test_overlapping_sets_rejected(self):
        with pytest.raises(SpecificationError):
            grid.GridSpec(goal_cells=frozenset({(1, 1)}),
                          lava_cells=frozenset({(1, 1)}))

    def test_out_of_bounds_cell_rejected(self):
        with pytest.raises(SpecificationError):
            grid.GridSpec(width=4, height=4, goal_cells=frozenset({(9, 0)}))

    def test_start_on_wall_rejected(self):
        with pytest.raises(SpecificationError):
            grid.GridSpec(wall_cells=frozenset({(0, 0)}), start_cell=(0, 0))

    def test_bad_weight_length_rejected(self):
        with pytest.raises(SpecificationError):
            grid.GridSpec(true_weights=(1.0, 2.0))


class TestDynamics:
    def test_walls_and_bounds_block(self, small_spec):
        state = grid.reset(small_spec)
        t = grid.step(small_spec, state, "up")  # off-grid: stay put
        assert t.next_state.agent_cell == state.agent_cell
        assert grid.featurize(small_spec, state, "up")[7] == 1.0  # blocked flag

    def test_goal_terminates(self, small_spec):
        state = grid.EnvState(agent_cell=(4, 3), step_index=0)
        t = grid.step(small_spec, state, "down")
        assert t.next_state.done_flag
        assert t.next_state.agent_cell == (4, 4)

    def test_lava_terminates_with_negative_reward(self, small_spec):
        state = grid.EnvState(agent_cell=(2, 1), step_index=0)
        t = grid.step(small_spec, state, "down")
        assert t.next_state.done_flag
        assert grid.transition_reward(small_spec, t) < 0

    def test_step_after_done_raises(self, small_spec):
        state = grid.EnvState(agent_cell=(4, 4), step_index=3, done_flag=True)
        with pytest.raises(UsageError):
            grid.step(small_spec, state, "up")

    def test_max_steps_caps_rollout(self, small_spec):
        ep = grid.rollout(small_spec, lambda s, r: "up", seed=0)
        assert len(ep) <= small_spec.max_steps


class TestFeaturize:
    def test_dimension_and_bias(self, small_spec):
        x = grid.featurize(small_spec, grid.reset(small_spec), "right")
        assert x.shape == (grid.N_FEATURES,)
        assert x[0] == 1.0 and x[6] == 1.0  # bias and step-cost indicator

    def test_goal_landing_sets_indicator(self, small_spec):
        x = grid.featurize(small_spec, grid.EnvState(agent_cell=(4, 3)), "down")
        assert x[3] == 1.0
        assert x[1] == 0.0 and x[2] == 0.0  # zero distance at the goal

    def test_reward_is_linear_in_weights(self, small_spec):
        state = grid.EnvState(agent_cell=(1, 1))
        x = grid.featurize(small_spec, state, "right")
        assert grid.true_reward(small_spec, state, "right") == pytest.approx(
            float(x @ np.array(small_spec.true_weights)))

    @settings(max_examples=40, deadline=None)
    @given(x=st.integers(0, 4), y=st.integers(0, 4),
           action=st.sampled_from(grid.ACTIONS))
    def test_features_bounded(self, x, y, action):
        spec = grid.GridSpec(width=5, height=5, goal_cells=frozenset({(4, 4)}),
                             lava_cells=frozenset({(2, 2)}),
                             wall_cells=frozenset({(1, 3)}))
        if (x, y) in spec.wall_cells:
            return
        feats = grid.featurize(spec, grid.EnvState(agent_cell=(x, y)), action)
        assert np.all(feats >= 0.0) and np.all(feats <= 1.0)


class TestReturns:
    def test_episode_return_discount_convention(self, small_spec):
        ep = grid.rollout(small_spec, grid.uniform_random_policy, seed=5)
        gamma = 0.9
        want = sum(gamma ** (t + 1) * grid.transition_reward(small_spec, tr)
                   for t, tr in enumerate(ep.transitions))
        assert grid.episode_return(small_spec, ep, gamma=gamma) == pytest.approx(want)

    def test_optimal_values_bad_gamma(self, small_spec):
        for gamma in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(SpecificationError):
                grid.optimal_values(
                    small_spec, lambda s, a: grid.true_reward(small_spec, s, a),
                    gamma=gamma)

    def test_policy_values_match_optimal_for_greedy(self, small_spec):
        fn = lambda s, a: grid.true_reward(small_spec, s, a)
        table = grid.optimal_values(small_spec, fn, gamma=0.95)
        v_pi = grid.policy_values(small_spec, table.greedy, fn, gamma=0.95)
        assert v_pi[small_spec.start_cell] == pytest.approx(
            table.value(small_spec.start_cell), abs=1e-8)


def test_enumerate_state_actions_covers_free_cells(small_spec):
    pairs = grid.enumerate_state_actions(small_spec)
    free = set(small_spec.free_cells())
    assert {c for c, _ in pairs} == free
    assert len(pairs) == len(free) * len(grid.ACTIONS)


def test_with_weights_replaces_only_weights(small_spec):
    other = grid.with_weights(small_spec, grid.SHAPED_WEIGHTS)
    assert other.true_weights == grid.SHAPED_WEIGHTS
    assert other.goal_cells == small_spec.goal_cells

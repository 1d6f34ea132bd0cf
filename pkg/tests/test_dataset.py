import numpy as np
import pytest

from rewardloop import feedback as fb
from rewardloop import grid
from rewardloop.dataset import ReplayBuffer
from rewardloop.errors import ResolutionError


class TestEpisodes:
    def test_duplicate_id_rejected(self, small_spec, buffer):
        ep = grid.rollout(small_spec, grid.uniform_random_policy, seed=9,
                          episode_id="ep0")
        with pytest.raises(ResolutionError):
            buffer.add_episode(ep)

    def test_unknown_episode_rejected(self, buffer):
        with pytest.raises(ResolutionError):
            buffer.episode("ghost")

    def test_policy_attribution(self, buffer):
        assert buffer.policy_of("ep0") == "random"
        assert buffer.policy_of("ghost") is None


class TestResolution:
    def test_state_action_single_row(self, buffer):
        t = fb.Target(kind="state_action", episode_id="ep0", index=0)
        rows = buffer.features_for_target(t)
        assert rows.shape == (1, grid.N_FEATURES)

    def test_segment_rows(self, buffer):
        t = fb.segment_target("ep0", 0, 3)
        assert buffer.features_for_target(t).shape == (3, grid.N_FEATURES)

    def test_segment_out_of_range_rejected(self, buffer):
        n = len(buffer.episode("ep0"))
        with pytest.raises(ResolutionError):
            buffer.features_for_target(fb.segment_target("ep0", 0, n + 5))

    def test_feature_set_indicator_row(self, buffer):
        t = fb.Target(kind="feature_set", feature_indices=(2, 5))
        rows = buffer.features_for_target(t)
        assert rows.shape == (1, grid.N_FEATURES)
        want = np.zeros(grid.N_FEATURES)
        want[[2, 5]] = 1.0
        assert np.array_equal(rows[0], want)

    def test_whole_behavior_concatenates_policy_episodes(self, buffer):
        t = fb.Target(kind="whole_behavior", policy_id="random")
        rows = buffer.features_for_target(t)
        total = sum(len(buffer.episode(e)) for e in sorted(buffer.episodes))
        assert rows.shape == (total, grid.N_FEATURES)

    def test_features_cached(self, buffer):
        a = buffer.episode_features("ep0")
        b = buffer.episode_features("ep0")
        assert a is b


class TestTrueValue:
    def test_mean_of_transition_rewards(self, small_spec, buffer):
        t = fb.segment_target("ep0", 0, 4)
        trs = buffer.transitions_for(t)
        want = np.mean([grid.transition_reward(small_spec, tr) for tr in trs])
        assert buffer.true_value(t) == pytest.approx(want)


def test_baseline_rows_cover_all_transitions(buffer):
    rows = buffer.baseline_features()
    total = sum(len(buffer.episode(e)) for e in buffer.episodes)
    assert rows.shape == (total, grid.N_FEATURES)
    assert np.array_equal(rows, buffer.baseline_features())

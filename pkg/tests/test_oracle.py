import numpy as np
import pytest
from scipy import stats

from rewardloop import feedback as fb
from rewardloop import grid
from rewardloop.dataset import ReplayBuffer
from rewardloop.errors import SpecificationError, UsageError
from rewardloop.oracle import Oracle, OracleConfig, Query


def seg(eid, start=0, stop=4):
    return fb.segment_target(eid, start, stop)


def make_oracle(buffer, **kw):
    return Oracle(cfg=OracleConfig(**kw), buffer=buffer)


def pair_query(buffer, qid="q0"):
    eids = sorted(buffer.episodes)
    return Query(query_id=qid, kind="PairwiseChoice",
                 targets=[seg(eids[0]), seg(eids[1])])


class TestConfigDomain:
    def test_rejects_bad_values(self):
        for kw in ({"rationality": -1}, {"mislabel_prob": 2}, {"availability": -0.5},
                   {"skill": 1.5}, {"noise_sigma": -0.1}):
            with pytest.raises(SpecificationError):
                OracleConfig(**kw)


class TestPairwise:
    def test_deterministic_picks_true_argmax(self, buffer, small_spec):
        oracle = make_oracle(buffer, deterministic=True)
        q = pair_query(buffer)
        m = oracle.respond(q)
        truths = [buffer.true_value(t) for t in q.targets]
        assert m.intrinsic["choice_index"] == int(np.argmax(truths))

    def test_beta_infinity_agreement(self, buffer):
        # a very large finite beta agrees with the deterministic flag
        q = pair_query(buffer)
        det = make_oracle(buffer, deterministic=True).respond(q)
        hot = make_oracle(buffer, rationality=1e6).respond(q)
        assert det.intrinsic["choice_index"] == hot.intrinsic["choice_index"]

    def test_boltzmann_frequencies(self, buffer):
        # empirical choice rate matches the softmax probability (chi-square)
        beta = 2.0
        oracle = make_oracle(buffer, rationality=beta, seed=11)
        q = pair_query(buffer)
        truths = np.array([buffer.true_value(t) for t in q.targets])
        p = float(np.exp(beta * truths[0])
                  / np.exp(beta * truths).sum())
        n = 2000
        wins = sum(oracle.respond(q).intrinsic["choice_index"] == 0
                   for _ in range(n))
        chi2 = (wins - n * p) ** 2 / (n * p) + ((n - wins) - n * (1 - p)) ** 2 \
            / (n * (1 - p))
        assert stats.chi2.sf(chi2, df=1) > 0.001

    def test_mislabel_flips_roughly_half(self, buffer):
        oracle = make_oracle(buffer, deterministic=True, mislabel_prob=1.0, seed=3)
        q = pair_query(buffer)
        picks = [oracle.respond(q).intrinsic["choice_index"] for _ in range(300)]
        frac = np.mean(picks)
        assert 0.4 < frac < 0.6

    def test_choice_set_size_validated(self, buffer):
        oracle = make_oracle(buffer)
        with pytest.raises(UsageError):
            oracle.respond(Query(query_id="q", kind="PairwiseChoice",
                                 targets=[seg(sorted(buffer.episodes)[0])]))


class TestRanking:
    def test_deterministic_ranking_sorts_by_truth(self, buffer):
        eids = sorted(buffer.episodes)[:4]
        targets = [seg(e) for e in eids]
        q = Query(query_id="q", kind="RankingList", targets=targets)
        m = make_oracle(buffer, deterministic=True).respond(q)
        order = [g[0] for g in m.intrinsic["order"]]
        truths = [buffer.true_value(t) for t in targets]
        assert order == sorted(range(4), key=lambda i: -truths[i])


class TestScalarResponses:
    def test_rating_clipped(self, buffer):
        oracle = make_oracle(buffer, noise_sigma=5.0, seed=1)
        t = seg(sorted(buffer.episodes)[0])
        for _ in range(20):
            m = oracle.respond(Query(query_id="q", kind="RatingSlider", targets=[t]))
            assert -1.0 <= m.intrinsic["widget"] <= 1.0

    def test_critique_sign_tracks_truth(self, buffer):
        oracle = make_oracle(buffer, deterministic=True)
        t = seg(sorted(buffer.episodes)[0])
        m = oracle.respond(Query(query_id="q", kind="CritiqueButton", targets=[t]))
        want = 1 if buffer.true_value(t) >= 0 else -1
        assert m.intrinsic["option"] == want

    def test_asymmetry_bias_shifts_ratings(self, buffer):
        t = seg(sorted(buffer.episodes)[0])
        q = Query(query_id="q", kind="RatingSlider", targets=[t])
        plain = make_oracle(buffer, deterministic=True).respond(q)
        biased = make_oracle(buffer, deterministic=True,
                             asymmetry_bias=0.5).respond(q)
        assert biased.intrinsic["widget"] >= plain.intrinsic["widget"]

    def test_feature_brush_sign(self, buffer):
        target = fb.Target(kind="feature_set", feature_indices=(4,))  # lava weight
        q = Query(query_id="q", kind="FeatureBrush", targets=[target])
        m = make_oracle(buffer, deterministic=True).respond(q)
        assert m.intrinsic["sign"] == -1

    def test_contextual_variables_filled(self, buffer):
        m = make_oracle(buffer).respond(pair_query(buffer))
        assert "response_time_ms" in m.contextual
        assert m.contextual["annotator_id"] == "oracle"


class TestDemonstrations:
    def test_skilled_deterministic_demo_is_optimal(self, small_spec, buffer):
        oracle = make_oracle(buffer, deterministic=True, skill=1.0)
        m = oracle.demonstrate(grid.reset(small_spec), horizon=20)
        # replaying the demo must reach the goal with the optimal return
        state = grid.reset(small_spec)
        total, disc = 0.0, 1.0
        for a in m.intrinsic["actions"]:
            t = grid.step(small_spec, state, a)
            disc *= 0.95
            total += disc * grid.transition_reward(small_spec, t)
            state = t.next_state
        table = grid.optimal_values(
            small_spec, lambda s, a: grid.true_reward(small_spec, s, a), gamma=0.95)
        assert state.done_flag
        assert total == pytest.approx(table.value(small_spec.start_cell), abs=1e-9)

    def test_low_skill_demo_degrades(self, small_spec, buffer):
        sloppy = make_oracle(buffer, skill=0.05, rationality=10.0, seed=5)
        m = sloppy.demonstrate(grid.reset(small_spec), horizon=20)
        assert m.intrinsic["optimality"] == pytest.approx(0.05)

    def test_horizon_validated(self, buffer, small_spec):
        with pytest.raises(UsageError):
            make_oracle(buffer).demonstrate(grid.reset(small_spec), horizon=0)


class TestProactive:
    def test_unavailable_oracle_never_emits(self, buffer):
        oracle = make_oracle(buffer, availability=0.0)
        ep = buffer.episode(sorted(buffer.episodes)[0])
        assert oracle.proactive_emit(ep) == []

    def test_emitted_measurements_marked(self, small_spec, buffer):
        oracle = make_oracle(buffer, availability=1.0, seed=2)
        emitted = []
        for eid in sorted(buffer.episodes):
            emitted.extend(oracle.proactive_emit(buffer.episode(eid)))
        for m in emitted:
            assert m.contextual.get("proactive") is True
            assert m.intrinsic["option"] in (-1, 1)

    def test_salience_gate(self, small_spec):
        # an episode whose segments all have equal salience emits nothing
        # (strictly-above-percentile rule)
        buf = ReplayBuffer(small_spec)
        ep = grid.rollout(small_spec, lambda s, r: "up", seed=0, episode_id="flat")
        buf.add_episode(ep)
        oracle = Oracle(cfg=OracleConfig(availability=1.0), buffer=buf)
        assert oracle.proactive_emit(ep) == []

import numpy as np
import pytest

from rewardloop import feedback as fb
from rewardloop import model as M
from rewardloop import queries as Q
from rewardloop.dataset import ReplayBuffer
from rewardloop.errors import SpecificationError, UsageError
from rewardloop.oracle import Query


@pytest.fixture
def ensemble():
    return M.make_ensemble(size=3, seed=0)


class TestCandidates:
    def test_segments_partition_episodes(self, buffer):
        segs = Q.candidate_segments(buffer, 8)
        for eid in sorted(buffer.episodes):
            covered = sorted((t.start, t.stop) for t in segs if t.episode_id == eid)
            n = len(buffer.episode(eid))
            if n == 0:
                assert covered == []
                continue
            assert covered[0][0] == 0 and covered[-1][1] == n
            for (a, b), (c, d) in zip(covered, covered[1:]):
                assert b == c  # contiguous, non-overlapping

    def test_deterministic_order(self, buffer):
        assert Q.candidate_segments(buffer, 8) == Q.candidate_segments(buffer, 8)


class TestPropose:
    def test_determinism(self, buffer, ensemble):
        s = Q.QueryStrategy(tag="EnsembleDisagreement")
        a = Q.propose_queries(buffer, ensemble, s, 5, seed=42)
        b = Q.propose_queries(buffer, ensemble, s, 5, seed=42)
        assert [(q.query_id, [t.to_dict() for t in q.targets]) for q in a] \
            == [(q.query_id, [t.to_dict() for t in q.targets]) for q in b]

    def test_no_dangling_references(self, buffer, ensemble):
        for tag in ("UniformRandom", "EnsembleDisagreement", "InfoGainGreedy"):
            for q in Q.propose_queries(buffer, ensemble, Q.QueryStrategy(tag=tag),
                                       6, seed=1):
                assert len(q.targets) == 2
                for t in q.targets:
                    ep = buffer.episode(t.episode_id)
                    assert 0 <= t.start < t.stop <= len(ep)
                assert q.targets[0] != q.targets[1]

    def test_empty_buffer_rejected(self, small_spec, ensemble):
        with pytest.raises(UsageError):
            Q.propose_queries(ReplayBuffer(small_spec), ensemble,
                              Q.QueryStrategy(), 3, seed=0)

    def test_disagreement_ranks_by_ensemble_spread(self, buffer, ensemble):
        s = Q.QueryStrategy(tag="EnsembleDisagreement", pool_size=32)
        queries = Q.propose_queries(buffer, ensemble, s, 4, seed=7)

        def spread(q):
            return sum(M.uncertainty(ensemble, t, buffer) for t in q.targets)

        scores = [spread(q) for q in queries]
        assert scores == sorted(scores, reverse=True)

    def test_unknown_tag_rejected(self):
        with pytest.raises(SpecificationError):
            Q.QueryStrategy(tag="Psychic")


class TestSchedule:
    def q(self, buffer):
        eid = sorted(buffer.episodes)[0]
        return Query(query_id="q", kind="PairwiseChoice",
                     targets=[fb.segment_target(eid, 0, 4)])

    def test_fatigue_forces_pairwise(self, buffer):
        fs = fb.FeedbackState(human=fb.HumanState(fatigue=0.9))
        assert Q.schedule_type(self.q(buffer), fs) == "PairwiseChoice"

    def test_uncertain_and_knowledgeable_gets_demo(self, buffer):
        fs = fb.FeedbackState(human=fb.HumanState(knowledge=0.9),
                              agent=fb.AgentState(mean_uncertainty=0.8))
        assert Q.schedule_type(self.q(buffer), fs) == "Demonstration"

    def test_feature_target_gets_brush(self, buffer):
        q = Query(query_id="q", kind="PairwiseChoice",
                  targets=[fb.Target(kind="feature_set", feature_indices=(1,))])
        assert Q.schedule_type(q, fb.FeedbackState()) == "FeatureBrush"

    def test_default_rating(self, buffer):
        assert Q.schedule_type(self.q(buffer), fb.FeedbackState()) == "RatingSlider"


class TestMergeProactive:
    def test_proactive_first_and_dedup(self, buffer):
        eid = sorted(buffer.episodes)[0]
        t = fb.segment_target(eid, 0, 4)
        m = fb.Measurement(intrinsic={"targets": [t.to_dict()], "option": 1},
                           contextual={"proactive": True})
        reactive = [Query(query_id="q0", kind="PairwiseChoice",
                          targets=[t, fb.segment_target(eid, 4, 8)]),
                    Query(query_id="q1", kind="PairwiseChoice",
                          targets=[fb.segment_target(eid, 4, 8),
                                   fb.segment_target(eid, 8, 12)])]
        queue = Q.merge_proactive(reactive, [m])
        assert queue[0].proactive
        # q0 shares a target with the proactive item and collapses
        reactive_ids = [w.query.query_id for w in queue if not w.proactive]
        assert reactive_ids == ["q1"]

    def test_no_proactive_passthrough(self, buffer):
        eid = sorted(buffer.episodes)[0]
        reactive = [Query(query_id="q0", kind="PairwiseChoice",
                          targets=[fb.segment_target(eid, 0, 4),
                                   fb.segment_target(eid, 4, 8)])]
        queue = Q.merge_proactive(reactive, [])
        assert len(queue) == 1 and not queue[0].proactive

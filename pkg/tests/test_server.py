import time

import pytest
from fastapi.testclient import TestClient

from rewardloop import model as M
from rewardloop import server as SV
from rewardloop import session as S
from rewardloop.oracle import OracleConfig


@pytest.fixture
def finished_session():
    reg = SV.Registry()
    cfg = S.SessionConfig(seed=3, rounds=1, rollouts_per_round=3,
                          queries_per_round=3,
                          oracles=(OracleConfig(deterministic=True),),
                          fit=M.FitConfig(lr=0.1, epochs=10))
    handle = reg.add("done", cfg)
    handle.runner.run()
    return TestClient(SV.create_app(reg)), handle


@pytest.fixture
def interactive_session():
    reg = SV.Registry()
    cfg = S.SessionConfig(seed=4, mode="interactive", rounds=1,
                          rollouts_per_round=2, queries_per_round=2,
                          oracles=(), query_timeout_s=10.0,
                          fit=M.FitConfig(lr=0.1, epochs=5))
    handle = reg.add("live", cfg)
    handle.start()
    client = TestClient(SV.create_app(reg))
    yield client, handle
    # keep answering pending queries so the runner thread can finish promptly
    deadline = time.monotonic() + 30
    while not handle.runner.finished and time.monotonic() < deadline:
        for qid, q in list(handle.exchange.pending.items()):
            handle.exchange.post(qid, _choice_measurement(q))
        time.sleep(0.01)
    handle.thread.join(timeout=30)


def _choice_measurement(q):
    from rewardloop.feedback import Measurement
    return Measurement(intrinsic={"targets": q["targets"], "choice_index": 0},
                       contextual={"annotator_id": "tester"})


def _wait_for_queries(client, sid, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        queries = client.get(f"/api/sessions/{sid}/queries").json()["queries"]
        if queries:
            return queries
        time.sleep(0.02)
    raise AssertionError("no pending queries appeared")


class TestSessionsList:
    def test_lists_and_404(self, finished_session):
        client, _ = finished_session
        body = client.get("/api/sessions").json()
        assert body["sessions"][0]["session_id"] == "done"
        assert body["sessions"][0]["finished"] is True
        assert client.get("/api/sessions/ghost/metrics").status_code == 404


class TestEpisodes:
    def test_pagination(self, finished_session):
        client, _ = finished_session
        one = client.get("/api/sessions/done/episodes?page=0&page_size=2").json()
        assert len(one["episodes"]) == 2
        rest = client.get("/api/sessions/done/episodes?page=1&page_size=2").json()
        assert one["total"] == rest["total"]
        ids = {e["episode_id"] for e in one["episodes"]} \
            | {e["episode_id"] for e in rest["episodes"]}
        assert len(ids) == min(one["total"], 4)
        assert "model_version" in one

    def test_bad_pagination_422(self, finished_session):
        client, _ = finished_session
        assert client.get(
            "/api/sessions/done/episodes?page=-1").status_code == 422

    def test_detail_carries_reward_trace_and_frames(self, finished_session):
        client, handle = finished_session
        eid = sorted(handle.runner.buffer.episodes)[0]
        body = client.get(f"/api/sessions/done/episodes/{eid}").json()
        assert body["model_version"] == handle.runner.model_version
        for step in body["steps"]:
            assert isinstance(step["learned_reward"], float)
            assert isinstance(step["true_reward"], float)
            frame = step["frame"]
            assert len(frame) == handle.runner.config.grid.height
            assert sum(row.count("@") for row in frame) == 1

    def test_unknown_episode_404(self, finished_session):
        client, _ = finished_session
        assert client.get("/api/sessions/done/episodes/ghost").status_code == 404


class TestMetrics:
    def test_snapshot_fields(self, finished_session):
        client, _ = finished_session
        body = client.get("/api/sessions/done/metrics").json()
        assert body["finished"] is True
        assert body["latest"]["alignment"] is not None
        assert len(body["uncertainty_histogram"]["counts"]) == 10
        assert len(body["loss_trace"]) > 0
        assert "model_version" in body


class TestInstancesAudit:
    def test_all_valid_with_profiles(self, finished_session):
        client, _ = finished_session
        body = client.get("/api/sessions/done/instances").json()
        assert body["total"] > 0
        for item in body["instances"]:
            assert item["violations"] == []
            assert set(item["profile"]) == {f"D{i}" for i in range(1, 10)}


class TestInteractiveFlow:
    def test_queries_answered_via_api(self, interactive_session):
        client, handle = interactive_session
        queries = _wait_for_queries(client, "live")
        q = queries[0]
        assert q["kind"] == "PairwiseChoice"
        assert len(q["frames"]) == len(q["targets"])
        r = client.post(f"/api/sessions/live/queries/{q['query_id']}/measurement",
                        json=_choice_measurement(q).to_dict())
        assert r.status_code == 200 and r.json()["accepted"]

    def test_unknown_query_404(self, interactive_session):
        client, _ = interactive_session
        _wait_for_queries(client, "live")
        r = client.post("/api/sessions/live/queries/ghost/measurement",
                        json={"intrinsic": {"x": 1}})
        assert r.status_code == 404

    def test_proactive_post_accepted(self, interactive_session):
        client, handle = interactive_session
        _wait_for_queries(client, "live")
        eid = sorted(handle.runner.buffer.episodes)[0]
        from rewardloop.feedback import segment_target
        body = {"intrinsic": {"targets": [segment_target(eid, 0, 2).to_dict()],
                              "option": 1},
                "contextual": {"annotator_id": "tester"}}
        r = client.post("/api/sessions/live/proactive", json=body)
        assert r.status_code == 200
        assert handle.exchange.unprompted


class TestModeGuards:
    def test_posting_to_simulated_session_409(self, finished_session):
        client, _ = finished_session
        r = client.post("/api/sessions/done/queries/q0/measurement",
                        json={"intrinsic": {"x": 1}})
        assert r.status_code == 409
        assert client.post("/api/sessions/done/proactive",
                           json={"intrinsic": {"x": 1}}).status_code == 409


def test_render_frame_symbols(finished_session):
    _, handle = finished_session
    spec = handle.runner.config.grid
    frame = SV.render_frame(spec, spec.start_cell)
    joined = "".join(frame)
    assert joined.count("@") == 1
    assert joined.count("G") == len(spec.goal_cells)
    assert joined.count("#") == len(spec.wall_cells)

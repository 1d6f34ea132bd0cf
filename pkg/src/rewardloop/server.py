"""Wire API over running or completed sessions.

Every response body carries the session's current ``model_version`` so
clients can detect staleness. Interactive sessions run in a background
thread and exchange queries/measurements through a ``QueryExchange``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import grid
from . import model as model_mod
from .errors import RewardLoopError
from .feedback import Measurement, Target, validate_instance, encode_instance
from .session import QueryExchange, SessionConfig, SessionRunner

API_VERSION = 1


# ---------------------------------------------------------------------------
# Rendering


def render_frame(spec: grid.GridSpec, agent_cell=None) -> list[str]:
    """Rows of characters, row 0 at the top: . free, # wall, G goal, L lava,
    @ agent."""
    rows = []
    for y in range(spec.height):
        row = []
        for x in range(spec.width):
            c = (x, y)
            ch = "."
            if c in spec.wall_cells:
                ch = "#"
            elif c in spec.goal_cells:
                ch = "G"
            elif c in spec.lava_cells:
                ch = "L"
            if agent_cell is not None and tuple(agent_cell) == c:
                ch = "@"
            row.append(ch)
        rows.append("".join(row))
    return rows


def target_frames(runner: SessionRunner, target: Target) -> list[list[str]]:
    spec = runner.config.grid
    if target.kind in ("state_action", "segment", "episode"):
        try:
            transitions = runner.buffer.transitions_for(target)
        except RewardLoopError:
            return []
        return [render_frame(spec, t.state.agent_cell) for t in transitions]
    return [render_frame(spec)]


# ---------------------------------------------------------------------------
# Registry


@dataclass
class SessionHandle:
    session_id: str
    runner: SessionRunner
    exchange: QueryExchange | None = None
    thread: threading.Thread | None = None

    def start(self) -> None:
        self.thread = threading.Thread(target=self.runner.run, daemon=True)
        self.thread.start()


@dataclass
class Registry:
    sessions: dict[str, SessionHandle] = field(default_factory=dict)

    def add(self, session_id: str, config: SessionConfig,
            log_path: str | None = None) -> SessionHandle:
        exchange = QueryExchange() if config.mode == "interactive" else None
        runner = SessionRunner(config, log_path=log_path, exchange=exchange)
        handle = SessionHandle(session_id=session_id, runner=runner, exchange=exchange)
        self.sessions[session_id] = handle
        return handle

    def get(self, session_id: str) -> SessionHandle:
        if session_id not in self.sessions:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return self.sessions[session_id]


# ---------------------------------------------------------------------------
# App


def create_app(registry: Registry) -> FastAPI:
    app = FastAPI(title="rewardloop", version=str(API_VERSION))
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.registry = registry

    def envelope(handle: SessionHandle, **payload) -> dict:
        return {"api_version": API_VERSION,
                "model_version": handle.runner.model_version, **payload}

    @app.get("/api/sessions")
    def list_sessions():
        return {"api_version": API_VERSION, "sessions": [
            {"session_id": h.session_id, "mode": h.runner.config.mode,
             "round": h.runner.round_index, "model_version": h.runner.model_version,
             "finished": h.runner.finished}
            for h in registry.sessions.values()]}

    @app.get("/api/sessions/{sid}/queries")
    def pending_queries(sid: str):
        handle = registry.get(sid)
        pending = []
        if handle.exchange is not None:
            for q in list(handle.exchange.pending.values()):
                targets = [Target.from_dict(d) for d in q["targets"]]
                pending.append({
                    **q,
                    "frames": [target_frames(handle.runner, t) for t in targets]})
        return envelope(handle, queries=pending)

    @app.post("/api/sessions/{sid}/queries/{qid}/measurement")
    def post_measurement(sid: str, qid: str, body: dict):
        handle = registry.get(sid)
        if handle.exchange is None:
            raise HTTPException(status_code=409, detail="session is not interactive")
        if qid not in handle.exchange.pending:
            raise HTTPException(status_code=404, detail=f"no pending query {qid!r}")
        try:
            m = Measurement.from_dict(body)
        except RewardLoopError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        handle.exchange.post(qid, m)
        return envelope(handle, accepted=True, query_id=qid)

    @app.post("/api/sessions/{sid}/proactive")
    def post_proactive(sid: str, body: dict):
        handle = registry.get(sid)
        if handle.exchange is None:
            raise HTTPException(status_code=409, detail="session is not interactive")
        try:
            m = Measurement.from_dict(body)
        except RewardLoopError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        if "proactive" not in m.contextual:
            m = Measurement(intrinsic=m.intrinsic,
                            contextual={**m.contextual, "proactive": True},
                            timestamp=m.timestamp)
        handle.exchange.post_proactive(m)
        return envelope(handle, accepted=True)

    @app.get("/api/sessions/{sid}/episodes")
    def list_episodes(sid: str, page: int = 0, page_size: int = 20):
        handle = registry.get(sid)
        if page < 0 or not 1 <= page_size <= 200:
            raise HTTPException(status_code=422, detail="bad pagination")
        ids = sorted(handle.runner.buffer.episodes)
        chunk = ids[page * page_size:(page + 1) * page_size]
        items = []
        for eid in chunk:
            ep = handle.runner.buffer.episode(eid)
            items.append({"episode_id": eid, "length": len(ep), "seed": ep.seed,
                          "policy_id": handle.runner.buffer.policy_of(eid)})
        return envelope(handle, episodes=items, page=page, page_size=page_size,
                        total=len(ids))

    @app.get("/api/sessions/{sid}/episodes/{eid}")
    def episode_detail(sid: str, eid: str):
        handle = registry.get(sid)
        runner = handle.runner
        if eid not in runner.buffer.episodes:
            raise HTTPException(status_code=404, detail=f"no episode {eid!r}")
        ep = runner.buffer.episode(eid)
        spec = runner.config.grid
        learned = np.zeros(len(ep))
        if len(ep):
            rows = runner.buffer.episode_features(eid)
            zero_ctx = np.zeros(model_mod.CONTEXT_LENGTH)
            learned = np.mean([m.forward(model_mod._with_context(
                rows, zero_ctx, m.context_mode)) for m in runner.ensemble.members], axis=0)
        steps = [{
            "index": i, "cell": list(t.state.agent_cell), "action": t.action,
            "next_cell": list(t.next_state.agent_cell),
            "true_reward": grid.transition_reward(spec, t),
            "learned_reward": float(learned[i]),
            "frame": render_frame(spec, t.state.agent_cell),
        } for i, t in enumerate(ep.transitions)]
        return envelope(handle, episode_id=eid, seed=ep.seed, steps=steps)

    @app.get("/api/sessions/{sid}/metrics")
    def metrics_snapshot(sid: str):
        handle = registry.get(sid)
        runner = handle.runner
        latest = (runner.log.by_kind("metrics") or [None])[-1]
        if latest is not None:
            latest = {k: v for k, v in latest.items() if k not in ("t", "kind", "seq")}
        from .queries import candidate_segments
        segs = candidate_segments(runner.buffer, runner.config.strategy.segment_len)[:32]
        uncs = [model_mod.uncertainty(runner.ensemble, t, runner.buffer) for t in segs]
        counts, edges = np.histogram(uncs, bins=10) if uncs else (np.zeros(10, int),
                                                                  np.linspace(0, 1, 11))
        return envelope(
            handle, round=runner.round_index, finished=runner.finished,
            n_instances=len(runner.instances),
            n_episodes=len(runner.buffer.episodes),
            loss_trace=runner.loss_trace[-200:], latest=latest,
            uncertainty_histogram={"counts": counts.tolist(),
                                   "edges": [float(e) for e in edges]})

    @app.get("/api/sessions/{sid}/instances")
    def instances_audit(sid: str, page: int = 0, page_size: int = 50):
        handle = registry.get(sid)
        if page < 0 or not 1 <= page_size <= 500:
            raise HTTPException(status_code=422, detail="bad pagination")
        chunk = handle.runner.instances[page * page_size:(page + 1) * page_size]
        items = [{
            "instance_id": inst.instance_id,
            "source_id": inst.source_id,
            "profile": inst.profile.to_dict(),
            "value_kind": inst.value.kind,
            "targets": [t.to_dict() for t in inst.targets],
            "violations": validate_instance(inst),
            "record": encode_instance(inst).decode(),
        } for inst in chunk]
        return envelope(handle, instances=items, page=page, page_size=page_size,
                        total=len(handle.runner.instances))

    return app


def serve(registry: Registry, host: str = "127.0.0.1", port: int = 8321) -> None:
    import uvicorn

    uvicorn.run(create_app(registry), host=host, port=port, log_level="warning")

"""Session orchestration: the full loop from rollouts through queries,
feedback, translation, reward-model fitting, and agent training, with an
append-only log and exact replay.

Log format: a header line, then one JSON record per line with strictly
increasing sequence numbers. Wall-clock timestamps live in the dedicated
"t" field so that logs are otherwise byte-identical per seed.
"""
from __future__ import annotations

import json
import queue as queue_mod
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from . import agent as agent_mod
from . import grid
from . import metrics as metrics_mod
from . import model as model_mod
from . import queries as queries_mod
from . import translate as translate_mod
from .dataset import ReplayBuffer
from .errors import RecordParseError, SpecificationError
from .feedback import (FeedbackInstance, FeedbackState, AgentState, HumanState,
                       InterfaceState, Measurement, Target, decode_instance,
                       encode_instance)
from .oracle import Oracle, OracleConfig, Query

LOG_HEADER = "rewardloop-log 1"
DEMO_HORIZON = 8


def derive_seed(*parts) -> int:
    """Stable child seed for a tuple of integer tags."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "linear"
    context_mode: str = "off"
    ensemble_size: int = model_mod.ENSEMBLE_SIZE


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    mode: str = "simulated"  # simulated | interactive
    rounds: int = 3
    rollouts_per_round: int = 8
    queries_per_round: int = 10
    interaction: str = "PairwiseChoice"  # an InteractionKind, or "auto"
    grid: grid.GridSpec = field(default_factory=grid.GridSpec)
    oracles: tuple[OracleConfig, ...] = (OracleConfig(),)
    strategy: queries_mod.QueryStrategy = queries_mod.QueryStrategy()
    rules: queries_mod.ScheduleRules = queries_mod.ScheduleRules()
    loss_weights: model_mod.LossWeights = model_mod.LossWeights()
    fit: model_mod.FitConfig = model_mod.FitConfig()
    agent: agent_mod.AgentConfig = agent_mod.AgentConfig()
    model: ModelConfig = ModelConfig()
    query_timeout_s: float = 30.0  # interactive mode: per-query wait

    def __post_init__(self):
        if self.mode not in ("simulated", "interactive"):
            raise SpecificationError(f"unknown mode {self.mode!r}")
        if self.mode == "simulated" and not self.oracles:
            raise SpecificationError("simulated mode requires at least one oracle")
        if self.interaction != "auto" and \
                self.interaction not in translate_mod.INTERACTION_KINDS:
            raise SpecificationError(f"unknown interaction {self.interaction!r}")
        if self.rounds < 0 or self.rollouts_per_round < 1 or self.queries_per_round < 1:
            raise SpecificationError("loop counts out of range")


def config_to_dict(cfg: SessionConfig) -> dict:
    out = asdict(cfg)
    g = out["grid"]
    for key in ("goal_cells", "lava_cells", "wall_cells"):
        g[key] = sorted([list(c) for c in g[key]])
    g["start_cell"] = list(g["start_cell"])
    g["true_weights"] = list(g["true_weights"])
    out["oracles"] = [asdict(o) for o in cfg.oracles]
    return out


def config_from_dict(data: dict) -> SessionConfig:
    data = dict(data)
    if "grid" in data:
        g = dict(data["grid"])
        for key in ("goal_cells", "lava_cells", "wall_cells"):
            if key in g:
                g[key] = frozenset(tuple(c) for c in g[key])
        if "start_cell" in g:
            g["start_cell"] = tuple(g["start_cell"])
        if "true_weights" in g:
            g["true_weights"] = tuple(g["true_weights"])
        data["grid"] = grid.GridSpec(**g)
    if "oracles" in data:
        data["oracles"] = tuple(OracleConfig(**o) for o in data["oracles"])
    for key, cls in (("strategy", queries_mod.QueryStrategy),
                     ("rules", queries_mod.ScheduleRules),
                     ("loss_weights", model_mod.LossWeights),
                     ("fit", model_mod.FitConfig),
                     ("agent", agent_mod.AgentConfig),
                     ("model", ModelConfig)):
        if key in data and isinstance(data[key], dict):
            data[key] = cls(**data[key])
    return SessionConfig(**data)


def load_config(path) -> SessionConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh) or {})


# ---------------------------------------------------------------------------
# Log


@dataclass
class SessionLog:
    records: list[dict] = field(default_factory=list)
    path: str | None = None
    _fh: object = None

    def append(self, kind: str, **payload) -> dict:
        record = {"seq": len(self.records), "kind": kind, "t": time.time(), **payload}
        self.records.append(record)
        if self.path:
            if self._fh is None:
                self._fh = open(self.path, "w")
                self._fh.write(LOG_HEADER + "\n")
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()
        return record

    def close(self):
        if self._fh:
            self._fh.close()
            self._fh = None

    def by_kind(self, kind: str) -> list[dict]:
        return [r for r in self.records if r["kind"] == kind]


def load_log(path) -> SessionLog:
    log = SessionLog()
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != LOG_HEADER:
            raise RecordParseError(f"bad log header {header!r}", seq=-1)
        for n, line in enumerate(fh):
            if not line.endswith("\n"):
                break  # partial trailing record from a crash; readable up to here
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"corrupt record: {exc}", seq=n) from None
            if record.get("seq") != n:
                raise RecordParseError(
                    f"sequence gap: expected {n}, got {record.get('seq')}", seq=n)
            log.records.append(record)
    return log


def strip_timestamps(log: SessionLog) -> list[dict]:
    """Records with wall-clock fields removed; the determinism comparison view."""
    return [{k: v for k, v in r.items() if k != "t"} for r in log.records]


# ---------------------------------------------------------------------------
# Query exchange (interactive mode)


class QueryExchange:
    """Hand-off point between the session loop and the wire API.

    The loop publishes pending queries and blocks on answers; clients list
    pending queries and post measurements (or unprompted proactive ones).
    """

    def __init__(self):
        self.pending: dict[str, dict] = {}
        self._answers: queue_mod.Queue = queue_mod.Queue()
        self.unprompted: list[Measurement] = []

    def publish(self, query: Query, kind: str) -> None:
        self.pending[query.query_id] = {
            "query_id": query.query_id, "kind": kind,
            "targets": [t.to_dict() for t in query.targets]}

    def post(self, query_id: str, measurement: Measurement) -> None:
        self._answers.put((query_id, measurement))

    def post_proactive(self, measurement: Measurement) -> None:
        self.unprompted.append(measurement)

    def wait(self, query_id: str, timeout_s: float) -> Measurement | None:
        deadline = time.monotonic() + timeout_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.pending.pop(query_id, None)
                return None
            try:
                qid, m = self._answers.get(timeout=min(remaining, 0.1))
            except queue_mod.Empty:
                continue
            if qid == query_id:
                self.pending.pop(query_id, None)
                return m
            # answer for a different (stale) query; drop it


# ---------------------------------------------------------------------------
# Runner


def materialize_episode(spec: grid.GridSpec, start_cell, actions,
                        episode_id: str, seed: int = 0) -> grid.Episode:
    """Authored (hypothetical) episode from a start cell and an action list."""
    state = grid.EnvState(tuple(start_cell))
    transitions = []
    for action in actions:
        if state.done_flag:
            break
        t = grid.step(spec, state, action)
        transitions.append(t)
        state = t.next_state
    return grid.Episode(episode_id=episode_id, transitions=tuple(transitions), seed=seed)


class SessionRunner:
    """Owns all mutable session state; one logical writer."""

    def __init__(self, config: SessionConfig, log_path: str | None = None,
                 exchange: QueryExchange | None = None):
        self.config = config
        self.log = SessionLog(path=log_path)
        self.exchange = exchange
        self.buffer = ReplayBuffer(config.grid)
        self.instances: list[FeedbackInstance] = []
        self.ensemble = model_mod.make_ensemble(
            kind=config.model.kind, context_mode=config.model.context_mode,
            size=config.model.ensemble_size, seed=derive_seed(config.seed, 1))
        self.model_version = 0
        self.trained: agent_mod.TrainedPolicy | None = None
        self.loss_trace: list[float] = []
        self.round_index = 0
        self.finished = False
        self.oracles = [Oracle(cfg=replace(o, seed=derive_seed(config.seed, 2, i)),
                               buffer=self.buffer)
                        for i, o in enumerate(config.oracles)]
        self.log.append("config", config=config_to_dict(config))

    # -- policies ----------------------------------------------------------

    def behavior_policy(self) -> grid.Policy:
        if self.trained is None:
            return grid.uniform_random_policy
        greedy = self.trained.policy()
        eps = self.config.agent.epsilon

        def pick(state, rng):
            if rng.random() < eps:
                return grid.uniform_random_policy(state, rng)
            return greedy(state, rng)

        return pick

    # -- logging helpers ---------------------------------------------------

    def _log_episode(self, episode: grid.Episode, policy_id: str, authored: bool = False):
        start = episode.transitions[0].state.agent_cell if episode.transitions \
            else self.config.grid.start_cell
        self.log.append(
            "episode", round=self.round_index, episode_id=episode.episode_id,
            seed=episode.seed, policy_id=policy_id, authored=authored,
            start_cell=list(start),
            actions=[t.action for t in episode.transitions])

    def _add_episode(self, episode: grid.Episode, policy_id: str, authored: bool = False):
        self.buffer.add_episode(episode, policy_id=policy_id)
        self._log_episode(episode, policy_id, authored)

    # -- loop --------------------------------------------------------------

    def feedback_state(self) -> FeedbackState:
        probe = queries_mod.candidate_segments(self.buffer, self.config.strategy.segment_len)
        mean_unc = float(np.mean([
            model_mod.uncertainty(self.ensemble, t, self.buffer) for t in probe[:16]])) \
            if probe else 0.0
        return FeedbackState(
            human=HumanState(),
            interface=InterfaceState(available_kinds=translate_mod.INTERACTION_KINDS,
                                     query_mode="reactive"),
            agent=AgentState(model_version=self.model_version, mean_uncertainty=mean_unc))

    def _schedule(self, query: Query, fs: FeedbackState) -> str:
        if self.config.interaction != "auto":
            return self.config.interaction
        return queries_mod.schedule_type(query, fs, self.config.rules)

    def _acquire_simulated(self, item: queries_mod.WorkItem, kind: str,
                           oracle: Oracle) -> Measurement | None:
        if item.proactive:
            return item.measurement
        query = item.query
        if kind == "Demonstration":
            t0 = self.buffer.transitions_for(query.targets[0])[0]
            m = oracle.demonstrate(replace(t0.state, done_flag=False), DEMO_HORIZON)
            return self._materialize_demo(m, query)
        if kind == "ActionAdvice":
            q = Query(query_id=query.query_id, kind="ActionAdvice",
                      targets=[Target(kind="state_action",
                                      episode_id=query.targets[0].episode_id,
                                      index=query.targets[0].start or 0)])
            m = oracle.respond(q)
            return self._materialize_advice(m, q)
        if kind in ("RatingSlider", "CritiqueButton"):
            q = Query(query_id=query.query_id, kind=kind, targets=query.targets[:1])
            return oracle.respond(q)
        return oracle.respond(Query(query_id=query.query_id, kind=kind,
                                    targets=query.targets))

    def _materialize_demo(self, m: Measurement, query: Query) -> Measurement:
        episode_id = f"demo-{query.query_id}"
        ep = materialize_episode(self.config.grid, m.intrinsic["start_cell"],
                                 m.intrinsic["actions"], episode_id)
        if not ep.transitions:
            return None
        self._add_episode(ep, policy_id=f"demo-r{self.round_index}", authored=True)
        target = Target(kind="segment", episode_id=episode_id, start=0,
                        stop=len(ep.transitions), hypothetical=True)
        intrinsic = dict(m.intrinsic)
        intrinsic["targets"] = [target.to_dict()]
        return Measurement(intrinsic=intrinsic, contextual=m.contextual,
                           timestamp=m.timestamp)

    def _materialize_advice(self, m: Measurement, query: Query) -> Measurement | None:
        original = query.targets[0]
        (trans,) = self.buffer.transitions_for(original)
        advised = m.intrinsic["advised_action"]
        if advised == trans.action:
            return None  # advice confirms the taken action; nothing to correct
        episode_id = f"adv-{query.query_id}"
        ep = materialize_episode(self.config.grid, trans.state.agent_cell, [advised],
                                 episode_id)
        self._add_episode(ep, policy_id=f"advice-r{self.round_index}", authored=True)
        corrected = Target(kind="state_action", episode_id=episode_id, index=0,
                           hypothetical=True)
        intrinsic = dict(m.intrinsic)
        intrinsic["targets"] = [original.to_dict(), corrected.to_dict()]
        return Measurement(intrinsic=intrinsic, contextual=m.contextual,
                           timestamp=m.timestamp)

    def run_round(self) -> None:
        cfg = self.config
        r = self.round_index
        policy = self.behavior_policy()
        policy_id = f"policy-v{self.model_version}"
        new_episodes = []
        for i in range(cfg.rollouts_per_round):
            ep = grid.rollout(cfg.grid, policy, seed=derive_seed(cfg.seed, 3, r, i),
                              episode_id=f"r{r:03d}e{i:03d}")
            self._add_episode(ep, policy_id=policy_id)
            new_episodes.append(ep)

        proactive_ms: list[Measurement] = []
        if cfg.mode == "simulated":
            for ep in new_episodes:
                proactive_ms.extend(self.oracles[0].proactive_emit(ep))
        elif self.exchange is not None:
            proactive_ms.extend(self.exchange.unprompted)
            self.exchange.unprompted = []

        reactive = queries_mod.propose_queries(
            self.buffer, self.ensemble, cfg.strategy, cfg.queries_per_round,
            seed=derive_seed(cfg.seed, 4, r))
        fs = self.feedback_state()
        queue = queries_mod.merge_proactive(reactive, proactive_ms)

        n_inst = 0
        for item in queue:
            kind = "CritiqueButton" if item.proactive else self._schedule(item.query, fs)
            qid = item.query.query_id if item.query else f"pro-r{r}-{n_inst}"
            if item.query is not None:
                self.log.append("query", round=r, query_id=qid, interaction=kind,
                                targets=[t.to_dict() for t in item.query.targets],
                                proactive=False)
            if cfg.mode == "simulated":
                m = self._acquire_simulated(item, kind, self.oracles[0])
            else:
                m = self._acquire_interactive(item, kind, qid)
            if m is None:
                self.log.append("nonengagement", round=r, query_id=qid)
                continue
            self.log.append("measurement", round=r, query_id=qid, interaction=kind,
                            proactive=item.proactive, measurement=m.to_dict())
            n_inst += self._translate_and_log(m, kind, qid, item.proactive, fs)

        if self.instances:
            fit_cfg = replace(cfg.fit, seed=derive_seed(cfg.seed, 5, r))
            self.ensemble, traces = model_mod.fit(
                self.ensemble, self.instances, self.buffer, cfg.loss_weights, fit_cfg)
            self.loss_trace.extend(np.mean(traces, axis=0).tolist())
        self.model_version += 1
        self.log.append("checkpoint", round=r, model_version=self.model_version,
                        checkpoint=model_mod.checkpoint_dict(self.ensemble))

        agent_cfg = replace(cfg.agent, seed=derive_seed(cfg.seed, 6, r))
        self.trained = agent_mod.train_q(
            cfg.grid, agent_mod.ensemble_mean_reward(self.ensemble, cfg.grid), agent_cfg)
        align = metrics_mod.ensemble_alignment(self.ensemble, cfg.grid)
        true_return, _ = agent_mod.evaluate(
            self.trained.policy(), lambda s, a: grid.true_reward(cfg.grid, s, a),
            cfg.grid, n_episodes=1, seed=derive_seed(cfg.seed, 7, r),
            gamma=cfg.agent.gamma)
        self.log.append("metrics", round=r, alignment=align.rho,
                        final_loss=self.loss_trace[-1] if self.loss_trace else None,
                        n_instances=len(self.instances), agent_return=true_return)
        self.round_index += 1

    def _translate_and_log(self, m: Measurement, kind: str, qid: str,
                           proactive: bool, fs: FeedbackState) -> int:
        result = translate_mod.translate(
            m, fs, kind, instance_id=qid,
            source_id=m.contextual.get("annotator_id", "human"),
            proactive=proactive or bool(m.contextual.get("proactive")))
        for inst in result.instances:
            self.instances.append(inst)
            self.log.append("instance", round=self.round_index,
                            record=encode_instance(inst).decode())
        return len(result.instances)

    def _acquire_interactive(self, item, kind, qid) -> Measurement | None:
        if item.proactive:
            return item.measurement
        if self.exchange is None:
            return None
        query = Query(query_id=qid, kind=kind, targets=item.query.targets)
        self.exchange.publish(query, kind)
        return self.exchange.wait(qid, self.config.query_timeout_s)

    def run(self) -> SessionLog:
        while self.round_index < self.config.rounds:
            self.run_round()
        self.finished = True
        self.log.close()
        return self.log


def run_session(config: SessionConfig, log_path: str | None = None,
                exchange: QueryExchange | None = None) -> SessionLog:
    return SessionRunner(config, log_path=log_path, exchange=exchange).run()


# ---------------------------------------------------------------------------
# Replay


@dataclass
class ReplayResult:
    buffer: ReplayBuffer
    instances: list[FeedbackInstance]
    ensemble: model_mod.Ensemble
    logged_checkpoint: dict | None


def replay(log: SessionLog) -> ReplayResult:
    """Re-run translation and fitting over the logged measurements.

    With the same seeds this reproduces the logged final checkpoint
    bit-exactly; raises on referential-integrity violations.
    """
    cfg_records = log.by_kind("config")
    if not cfg_records:
        raise RecordParseError("log has no config record", seq=0)
    config = config_from_dict(cfg_records[0]["config"])
    buffer = ReplayBuffer(config.grid)
    ensemble = model_mod.make_ensemble(
        kind=config.model.kind, context_mode=config.model.context_mode,
        size=config.model.ensemble_size, seed=derive_seed(config.seed, 1))
    instances: list[FeedbackInstance] = []
    checkpoint = None
    fs = FeedbackState()

    # Replay in record order so fitting sees exactly the buffer and dataset
    # state the live run saw at each checkpoint.
    for rec in log.records:
        kind = rec["kind"]
        if kind == "episode":
            ep = materialize_episode(config.grid, rec["start_cell"], rec["actions"],
                                     rec["episode_id"], seed=rec.get("seed", 0))
            buffer.add_episode(ep, policy_id=rec.get("policy_id"))
        elif kind == "measurement":
            m = Measurement.from_dict(rec["measurement"])
            result = translate_mod.translate(
                m, fs, rec["interaction"], instance_id=rec["query_id"],
                source_id=m.contextual.get("annotator_id", "human"),
                proactive=rec.get("proactive", False)
                or bool(m.contextual.get("proactive")))
            instances.extend(result.instances)
        elif kind == "instance":
            inst = decode_instance(rec["record"].encode())
            for t in inst.targets:
                if t.kind in ("state_action", "segment", "episode"):
                    buffer.episode(t.episode_id)  # referential integrity
        elif kind == "checkpoint":
            checkpoint = rec["checkpoint"]
            if instances:
                fit_cfg = replace(config.fit,
                                  seed=derive_seed(config.seed, 5, rec["round"]))
                ensemble, _ = model_mod.fit(ensemble, instances, buffer,
                                            config.loss_weights, fit_cfg)
    return ReplayResult(buffer=buffer, instances=instances, ensemble=ensemble,
                        logged_checkpoint=checkpoint)

"""Joint reward model over heterogeneous feedback with ensemble uncertainty.

Loss families: squared-error regression on scalar feedback, logistic
(Bradley-Terry) likelihood on pairwise relations with an epsilon-margin tie
model, margin loss on instruction targets against the buffer baseline, and
squared error on feature-set targets. Every term is weighted by the
instance's confidence; gradients are exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import ReplayBuffer
from .errors import DivergenceError, SpecificationError, UsageError
from .feedback import CONTEXT_LENGTH, FeedbackInstance, Target
from .grid import N_FEATURES

HIDDEN_WIDTH = 16
ENSEMBLE_SIZE = 5
TIE_EPSILON = 0.1
CHECKPOINT_VERSION = 1


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class RewardModel:
    kind: str  # "linear" | "mlp"
    params: np.ndarray
    context_mode: str = "off"  # "off" | "concat"

    def __post_init__(self):
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))
        if self.kind not in ("linear", "mlp"):
            raise SpecificationError(f"unknown model kind {self.kind!r}")
        if self.context_mode not in ("off", "concat"):
            raise SpecificationError(f"unknown context mode {self.context_mode!r}")
        expected = n_params(self.kind, self.context_mode)
        if self.params.shape != (expected,):
            raise SpecificationError(
                f"{self.kind}/{self.context_mode} needs {expected} parameters, "
                f"got {self.params.shape}")
        if not np.all(np.isfinite(self.params)):
            raise SpecificationError("parameters must be finite")

    @property
    def input_dim(self) -> int:
        return input_dim(self.context_mode)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return x @ self.params
        w1, b1, w2, b2 = self._unpack()
        return np.tanh(x @ w1.T + b1) @ w2 + b2

    def forward_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-row predictions and the per-row Jacobian w.r.t. the flat params."""
        if self.kind == "linear":
            return x @ self.params, x
        w1, b1, w2, b2 = self._unpack()
        z = x @ w1.T + b1
        h = np.tanh(z)
        y = h @ w2 + b2
        dz = (1.0 - h * h) * w2  # [n, H]
        dw1 = dz[:, :, None] * x[:, None, :]  # [n, H, in]
        jac = np.concatenate(
            [dw1.reshape(x.shape[0], -1), dz, h, np.ones((x.shape[0], 1))], axis=1)
        return y, jac

    def _unpack(self):
        d = self.input_dim
        h = HIDDEN_WIDTH
        p = self.params
        w1 = p[: h * d].reshape(h, d)
        b1 = p[h * d: h * d + h]
        w2 = p[h * d + h: h * d + 2 * h]
        b2 = p[-1]
        return w1, b1, w2, b2


def input_dim(context_mode: str) -> int:
    return N_FEATURES + (CONTEXT_LENGTH if context_mode == "concat" else 0)


def n_params(kind: str, context_mode: str) -> int:
    d = input_dim(context_mode)
    if kind == "linear":
        return d
    return HIDDEN_WIDTH * d + 2 * HIDDEN_WIDTH + 1


def init_model(kind: str, context_mode: str, rng: np.random.Generator) -> RewardModel:
    params = rng.normal(0.0, 0.1, size=n_params(kind, context_mode))
    return RewardModel(kind=kind, params=params, context_mode=context_mode)


@dataclass(frozen=True)
class Ensemble:
    members: tuple[RewardModel, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        kinds = {(m.kind, m.context_mode) for m in self.members}
        if len(kinds) != 1:
            raise SpecificationError("ensemble members must share kind and context mode")

    @property
    def kind(self) -> str:
        return self.members[0].kind

    @property
    def context_mode(self) -> str:
        return self.members[0].context_mode


def make_ensemble(kind: str = "linear", context_mode: str = "off",
                  size: int = ENSEMBLE_SIZE, seed: int = 0) -> Ensemble:
    rngs = [np.random.default_rng([seed, i]) for i in range(size)]
    return Ensemble(members=tuple(init_model(kind, context_mode, r) for r in rngs),
                    seed=seed)


@dataclass(frozen=True)
class LossWeights:
    regression: float = 1.0
    pairwise: float = 1.0
    instruction: float = 1.0
    feature: float = 1.0
    instruction_margin: float = 0.5

    def __post_init__(self):
        fams = (self.regression, self.pairwise, self.instruction, self.feature)
        if any(w < 0 for w in fams):
            raise SpecificationError("loss weights must be nonnegative")
        if not any(w > 0 for w in fams):
            raise SpecificationError("at least one loss weight must be positive")


# ---------------------------------------------------------------------------
# Prediction


def _with_context(rows: np.ndarray, context, context_mode: str) -> np.ndarray:
    if context_mode != "concat":
        return rows
    ctx = np.broadcast_to(np.asarray(context, dtype=float), (rows.shape[0], CONTEXT_LENGTH))
    return np.concatenate([rows, ctx], axis=1)


def predict(model: RewardModel, target: Target, buffer: ReplayBuffer,
            context=None) -> float:
    rows = _with_context(buffer.features_for_target(target),
                         np.zeros(CONTEXT_LENGTH) if context is None else context,
                         model.context_mode)
    return float(np.mean(model.forward(rows)))


def preference_likelihood(model: RewardModel, a: Target, b: Target,
                          buffer: ReplayBuffer, context=None) -> float:
    """P(a preferred over b) = logistic(r(a) - r(b))."""
    return float(_sigmoid(predict(model, a, buffer, context)
                          - predict(model, b, buffer, context)))


def tie_likelihood(model: RewardModel, a: Target, b: Target,
                   buffer: ReplayBuffer, context=None,
                   epsilon: float = TIE_EPSILON) -> float:
    d = predict(model, a, buffer, context) - predict(model, b, buffer, context)
    return float(_sigmoid(d + epsilon) - _sigmoid(d - epsilon))


def uncertainty(ensemble: Ensemble, target: Target, buffer: ReplayBuffer,
                context=None) -> float:
    preds = [predict(m, target, buffer, context) for m in ensemble.members]
    return float(np.std(preds))


# ---------------------------------------------------------------------------
# Compiled batches (vectorized loss over heterogeneous instances)


@dataclass
class CompiledBatch:
    """Stacked feature rows plus per-family index arrays into targets."""

    rows: np.ndarray                  # [R, input_dim]
    row_target: np.ndarray            # [R] target slot per row
    target_counts: np.ndarray         # [T]
    reg_idx: np.ndarray               # regression: target slots
    reg_y: np.ndarray
    reg_c: np.ndarray
    pair_a: np.ndarray                # pairwise: preferred / other slots
    pair_b: np.ndarray
    pair_tie: np.ndarray
    pair_c: np.ndarray
    inst_idx: np.ndarray              # instruction: demo slots
    inst_w: np.ndarray
    inst_c: np.ndarray
    feat_idx: np.ndarray              # feature-set regression
    feat_y: np.ndarray
    feat_c: np.ndarray
    baseline_rows: np.ndarray | None  # instruction baseline (buffer mean)
    n_instances: int = 0

    def target_means(self, row_values: np.ndarray) -> np.ndarray:
        sums = np.zeros((self.target_counts.shape[0],) + row_values.shape[1:])
        np.add.at(sums, self.row_target, row_values)
        denom = self.target_counts.reshape((-1,) + (1,) * (row_values.ndim - 1))
        return sums / denom


def compile_batch(instances: list[FeedbackInstance], buffer: ReplayBuffer,
                  context_mode: str = "off") -> CompiledBatch:
    if not instances:
        raise UsageError("empty batch")
    rows_list: list[np.ndarray] = []
    row_target: list[int] = []
    counts: list[int] = []
    reg, pair, inst, feat = [], [], [], []
    need_baseline = False

    def add_target(target: Target, context) -> int:
        slot = len(counts)
        mat = _with_context(buffer.features_for_target(target), context, context_mode)
        rows_list.append(mat)
        row_target.extend([slot] * mat.shape[0])
        counts.append(mat.shape[0])
        return slot

    for fi in instances:
        c = fi.confidence
        if fi.value.kind == "relation":
            flat = [i for g in fi.value.groups for i in g]
            tie = len(fi.value.groups) == 1
            a, b = flat[0], flat[1]
            pair.append((add_target(fi.targets[a], fi.context),
                         add_target(fi.targets[b], fi.context), tie, c))
        elif fi.value.kind == "instruction":
            inst.append((add_target(fi.targets[0], fi.context), fi.value.weight, c))
            need_baseline = True
        elif fi.targets[0].kind == "feature_set":
            feat.append((add_target(fi.targets[0], fi.context), fi.value.numeric(), c))
        else:
            reg.append((add_target(fi.targets[0], fi.context), fi.value.numeric(), c))

    baseline = None
    if need_baseline:
        baseline = _with_context(buffer.baseline_features(),
                                 np.zeros(CONTEXT_LENGTH), context_mode)

    def cols(items, types):
        if not items:
            return [np.zeros(0, dtype=t) for t in types]
        return [np.array(col, dtype=t) for col, t in zip(zip(*items), types)]

    reg_idx, reg_y, reg_c = cols(reg, (np.int64, float, float))
    pair_a, pair_b, pair_tie, pair_c = cols(pair, (np.int64, np.int64, bool, float))
    inst_idx, inst_w, inst_c = cols(inst, (np.int64, float, float))
    feat_idx, feat_y, feat_c = cols(feat, (np.int64, float, float))
    return CompiledBatch(
        rows=np.concatenate(rows_list) if rows_list else np.zeros((0, input_dim(context_mode))),
        row_target=np.array(row_target, dtype=np.int64),
        target_counts=np.array(counts, dtype=float),
        reg_idx=reg_idx, reg_y=reg_y, reg_c=reg_c,
        pair_a=pair_a, pair_b=pair_b, pair_tie=pair_tie, pair_c=pair_c,
        inst_idx=inst_idx, inst_w=inst_w, inst_c=inst_c,
        feat_idx=feat_idx, feat_y=feat_y, feat_c=feat_c,
        baseline_rows=baseline, n_instances=len(instances))


def loss_and_grad(model: RewardModel, batch, weights: LossWeights,
                  buffer: ReplayBuffer | None = None) -> tuple[float, np.ndarray]:
    """Total weighted loss and its exact analytic gradient.

    ``batch`` is either a CompiledBatch or a list of FeedbackInstances (the
    latter requires ``buffer`` and compiles on the fly).
    """
    if not isinstance(batch, CompiledBatch):
        if buffer is None:
            raise UsageError("raw instance batches need the replay buffer")
        batch = compile_batch(batch, buffer, model.context_mode)
    cb = batch
    preds_rows, jac_rows = model.forward_grad(cb.rows)
    pred_t = cb.target_means(preds_rows)
    jac_t = cb.target_means(jac_rows)
    loss = 0.0
    grad = np.zeros_like(model.params)

    def sq_term(idx, y, c, w):
        nonlocal loss, grad
        if w == 0.0 or idx.size == 0:
            return
        r = pred_t[idx] - y
        loss += w * float(np.sum(c * r * r))
        grad += 2.0 * w * ((c * r) @ jac_t[idx])

    sq_term(cb.reg_idx, cb.reg_y, cb.reg_c, weights.regression)
    sq_term(cb.feat_idx, cb.feat_y, cb.feat_c, weights.feature)

    if weights.pairwise > 0.0 and cb.pair_a.size:
        d = pred_t[cb.pair_a] - pred_t[cb.pair_b]
        jd = jac_t[cb.pair_a] - jac_t[cb.pair_b]
        strict = ~cb.pair_tie
        if strict.any():
            ds = d[strict]
            p = _sigmoid(ds)
            # -log sigmoid(d) in the overflow-safe logaddexp form
            loss += weights.pairwise * float(
                np.sum(cb.pair_c[strict] * np.logaddexp(0.0, -ds)))
            grad += weights.pairwise * ((cb.pair_c[strict] * (p - 1.0)) @ jd[strict])
        if cb.pair_tie.any():
            dt = d[cb.pair_tie]
            hi, lo = _sigmoid(dt + TIE_EPSILON), _sigmoid(dt - TIE_EPSILON)
            p = np.maximum(hi - lo, 1e-300)
            dp = hi * (1 - hi) - lo * (1 - lo)
            c = cb.pair_c[cb.pair_tie]
            loss += weights.pairwise * float(np.sum(-c * np.log(p)))
            grad += weights.pairwise * ((-c * dp / p) @ jd[cb.pair_tie])

    if weights.instruction > 0.0 and cb.inst_idx.size:
        base_preds, base_jac = model.forward_grad(cb.baseline_rows)
        pb = float(np.mean(base_preds))
        jb = np.mean(base_jac, axis=0)
        margin = weights.instruction_margin - (pred_t[cb.inst_idx] - pb)
        active = margin > 0.0
        cw = cb.inst_c * cb.inst_w
        loss += weights.instruction * float(np.sum(cw[active] * margin[active]))
        if active.any():
            grad += weights.instruction * (cw[active] @ (jb - jac_t[cb.inst_idx][active]))

    return float(loss), grad


# ---------------------------------------------------------------------------
# Fitting


@dataclass(frozen=True)
class FitConfig:
    lr: float = 0.05
    epochs: int = 100
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    halve_on_increase: bool = False


def fit(ensemble: Ensemble, instances: list[FeedbackInstance], buffer: ReplayBuffer,
        weights: LossWeights, config: FitConfig) -> tuple[Ensemble, list[list[float]]]:
    """Gradient descent per member with member-specific shuffling.

    Deterministic per (ensemble, dataset order, config.seed); returns the
    fitted ensemble and a per-member, per-epoch loss trace.
    """
    if not instances:
        raise UsageError("fit requires a nonempty dataset")
    compiled = compile_batch(instances, buffer, ensemble.context_mode)
    members: list[RewardModel] = []
    traces: list[list[float]] = []
    for mi, member in enumerate(ensemble.members):
        rng = np.random.default_rng([config.seed, mi])
        params = member.params.copy()
        lr = config.lr
        trace: list[float] = []
        prev = None
        prev_params = params
        for epoch in range(config.epochs):
            model = replace(member, params=params)
            if config.batch_size is None or config.batch_size >= len(instances):
                loss, grad = loss_and_grad(model, compiled, weights)
                if config.halve_on_increase and prev is not None and loss > prev:
                    # undo the step that overshot, retry at half the rate
                    params = prev_params
                    lr *= 0.5
                    loss, grad = loss_and_grad(replace(member, params=params), compiled, weights)
                prev_params = params
                params = params - lr * grad
            else:
                order = rng.permutation(len(instances))
                for lo in range(0, len(order), config.batch_size):
                    chunk = [instances[i] for i in order[lo:lo + config.batch_size]]
                    _, grad = loss_and_grad(replace(member, params=params), chunk,
                                            weights, buffer=buffer)
                    params = params - lr * grad
                loss, _ = loss_and_grad(replace(member, params=params), compiled, weights)
            if not np.isfinite(loss) or not np.all(np.isfinite(params)):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            prev = loss
            trace.append(float(loss))
        members.append(replace(member, params=params))
        traces.append(trace)
    return Ensemble(members=tuple(members), seed=ensemble.seed), traces


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(ensemble: Ensemble, path) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "kind": ensemble.kind,
        "context_mode": ensemble.context_mode,
        "seed": ensemble.seed,
        "members": [[float(p) for p in m.params] for m in ensemble.members],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def checkpoint_dict(ensemble: Ensemble) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "kind": ensemble.kind,
        "context_mode": ensemble.context_mode,
        "seed": ensemble.seed,
        "members": [[float(p) for p in m.params] for m in ensemble.members],
    }


def ensemble_from_dict(payload: dict) -> Ensemble:
    if payload.get("version") != CHECKPOINT_VERSION:
        raise SpecificationError(f"unsupported checkpoint version {payload.get('version')}")
    members = tuple(
        RewardModel(kind=payload["kind"], params=np.array(p, dtype=float),
                    context_mode=payload["context_mode"])
        for p in payload["members"])
    return Ensemble(members=members, seed=payload.get("seed", 0))


def load_checkpoint(path) -> Ensemble:
    with open(path) as fh:
        return ensemble_from_dict(json.load(fh))

"""Executable quality estimators: precision (repeat variance), bias against
a labeled reference, informativeness (uncertainty drop), plus alignment and
regret evaluation.

Alignment is rank-based on purpose: preferences identify reward only up to
an additive shift, so the evaluation must be shift-invariant.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import grid
from .dataset import ReplayBuffer
from .errors import EstimationError, UsageError
from .feedback import FeedbackInstance, Target
from .model import Ensemble, RewardModel, predict, uncertainty


def _target_key(t: Target) -> str:
    return json.dumps(t.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class PrecisionReport:
    per_target_std: dict[str, float]
    pooled_std: float
    n: int


def precision(instances: list[FeedbackInstance]) -> PrecisionReport:
    """Population std of repeated scalar feedback per identical target,
    pooled across groups weighted by group size; relations are excluded."""
    groups: dict[str, list[float]] = {}
    for fi in instances:
        if fi.value.kind == "relation":
            continue
        groups.setdefault(_target_key(fi.targets[0]), []).append(fi.value.numeric())
    repeated = {k: v for k, v in groups.items() if len(v) >= 2}
    if not repeated:
        raise EstimationError("precision needs >= 2 instances for at least one target")
    per = {k: float(np.std(v)) for k, v in repeated.items()}
    total = sum(len(v) for v in repeated.values())
    pooled = float(np.sqrt(sum(len(v) * np.var(v) for v in repeated.values()) / total))
    return PrecisionReport(per_target_std=per, pooled_std=pooled, n=total)


@dataclass(frozen=True)
class BiasReport:
    mean_shift: float
    positive_fraction_delta: float
    n: int


def bias(instances: list[FeedbackInstance],
         reference: dict[str, float] | list[tuple[Target, float]]) -> BiasReport:
    """Emitted-minus-reference shift over shared targets.

    ``reference`` maps target keys (or Target objects) to pre-labeled values.
    """
    if not isinstance(reference, dict):
        reference = {_target_key(t): v for t, v in reference}
    emitted, ref = [], []
    for fi in instances:
        if fi.value.kind == "relation":
            continue
        key = _target_key(fi.targets[0])
        if key in reference:
            emitted.append(fi.value.numeric())
            ref.append(reference[key])
    if not emitted:
        raise EstimationError("bias estimator: instances and reference share no targets")
    emitted_a, ref_a = np.array(emitted), np.array(ref)
    return BiasReport(
        mean_shift=float(np.mean(emitted_a - ref_a)),
        positive_fraction_delta=float(np.mean(emitted_a > 0) - np.mean(ref_a > 0)),
        n=len(emitted))


def informativeness(ensemble_before: Ensemble, ensemble_after: Ensemble,
                    probes: list[Target], buffer: ReplayBuffer) -> float:
    """Mean uncertainty drop over a probe set; negative means uncertainty rose."""
    if not probes:
        raise UsageError("informativeness needs a nonempty probe set")
    before = np.mean([uncertainty(ensemble_before, t, buffer) for t in probes])
    after = np.mean([uncertainty(ensemble_after, t, buffer) for t in probes])
    return float(before - after)


@dataclass(frozen=True)
class AlignmentResult:
    rho: float
    constant_predictions: bool = False

    def __float__(self):
        return self.rho


def alignment(model_or_fn, spec: grid.GridSpec,
              truth=None) -> AlignmentResult:
    """Spearman rank correlation between predicted and true reward over all
    free state-actions; ties mid-ranked, constant predictions define rho=0."""
    pairs = grid.enumerate_state_actions(spec)
    if not pairs:
        raise UsageError("empty evaluation set")
    truth_fn = truth or (lambda s, a: grid.true_reward(spec, s, a))
    if isinstance(model_or_fn, RewardModel):
        feats = np.stack([grid.featurize(spec, grid.EnvState(c), a) for c, a in pairs])
        if model_or_fn.context_mode == "concat":
            feats = np.concatenate(
                [feats, np.zeros((feats.shape[0], model_or_fn.input_dim - feats.shape[1]))],
                axis=1)
        preds = model_or_fn.forward(feats)
    else:
        preds = np.array([model_or_fn(grid.EnvState(c), a) for c, a in pairs])
    trues = np.array([truth_fn(grid.EnvState(c), a) for c, a in pairs])
    if np.ptp(preds) == 0.0:
        return AlignmentResult(rho=0.0, constant_predictions=True)
    rho = stats.spearmanr(preds, trues).statistic
    return AlignmentResult(rho=float(rho))


def ensemble_alignment(ensemble: Ensemble, spec: grid.GridSpec, truth=None) -> AlignmentResult:
    def mean_fn(state, action):
        f = grid.featurize(spec, state, action)
        if ensemble.context_mode == "concat":
            f = np.concatenate([f, np.zeros(ensemble.members[0].input_dim - f.shape[0])])
        return float(np.mean([m.forward(f[None, :])[0] for m in ensemble.members]))
    return alignment(mean_fn, spec, truth)


def regret(policy_table: dict, spec: grid.GridSpec, gamma: float,
           truth=None) -> float:
    """V*(start) - V_pi(start) under the true reward, both by exact evaluation."""
    truth_fn = truth or (lambda s, a: grid.true_reward(spec, s, a))
    optimal = grid.optimal_values(spec, truth_fn, gamma)
    v_pi = grid.policy_values(spec, policy_table, truth_fn, gamma)
    return float(optimal.values[spec.start_cell] - v_pi[spec.start_cell])


@dataclass(frozen=True)
class ContextDependenceReport:
    """Least-squares regression of scalar feedback values on the context
    components; large coefficients flag context-dependent feedback."""

    coefficients: tuple[float, ...]
    r_squared: float
    n: int


def context_dependence(instances: list[FeedbackInstance]) -> ContextDependenceReport:
    rows = [(fi.context, fi.value.numeric()) for fi in instances
            if fi.value.kind != "relation"]
    if len(rows) < 8:
        raise EstimationError("context-dependence report needs >= 8 scalar instances")
    x = np.stack([r[0] for r in rows])
    x = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    y = np.array([r[1] for r in rows])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 0.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return ContextDependenceReport(coefficients=tuple(float(c) for c in coef[:-1]),
                                   r_squared=r2, n=len(rows))

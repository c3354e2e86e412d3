"""Smooth softmax surrogate of the indicator weights and the epsilon tuner.

The hard acceptance test |max_m diff_m - eps| <= 0 is replaced by

    phi_beta(x_1..x_M; eps) = exp(beta*eps) / (exp(beta*eps) + sum_j exp(beta*x_j))

(sum-exp variant) or with sum_j exp(beta*x_j) replaced by
exp(beta*max_j x_j) (max-exp variant, a plain logistic in eps - max x).
Large beta sharpens phi toward the indicator.  Predictions are
self-normalized weighted response means; the squared loss over a tuning
set is minimized in eps by projected gradient descent using the exact
analytic derivative.

Every quantity is computed in the log domain, shifted by the largest
exponent, so nothing overflows for |beta * x| up to 1e4.  Writing
L_i = log(exp(beta*eps) + E_i) with E_i the variant's exponent sum, the
unnormalized weight is w_i = exp(-L_i), the kernel value is
phi_i = exp(beta*eps - L_i), and the derivative chain uses only
dL_i/d_eps = beta*phi_i, so all intermediate factors live in (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cobra import AggregationSet


class Variant(Enum):
    SUMEXP = "sumexp"
    MAXEXP = "maxexp"


class TerminationReason(Enum):
    GRAD_TOL = "grad_tol"
    STEP_TOL = "step_tol"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class SmoothingParams:
    beta: float
    variant: Variant = Variant.SUMEXP

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError("beta must be finite and > 0")


@dataclass(frozen=True)
class TuningSet:
    """Machine predictions and targets for the rows the tuner scores on.

    Rows must either be disjoint from the aggregation set's rows, or be
    exactly the aggregation rows with exclude_self=True passed to the
    loss functions.  A tuning row silently shared with the aggregation
    set matches itself at distance 0 for any epsilon, which drags the
    tuned epsilon to 0.
    """

    machine_preds: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.machine_preds, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        object.__setattr__(self, "machine_preds", P)
        object.__setattr__(self, "targets", y)
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise ValueError("machine_preds must be n x M with n >= 1, M >= 1")
        if y.shape != (P.shape[0],):
            raise ValueError("targets length must equal machine_preds row count")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(y))):
            raise ValueError("tuning set contains a non-finite value")


@dataclass(frozen=True)
class GradientDescentConfig:
    epsilon_init: float
    learning_rate: float = 0.1
    max_iters: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-8

    def __post_init__(self):
        if not (np.isfinite(self.epsilon_init) and self.epsilon_init >= 0.0):
            raise ValueError("epsilon_init must be finite and >= 0")
        if self.learning_rate <= 0 or self.grad_tol <= 0 or self.step_tol <= 0:
            raise ValueError("learning_rate, grad_tol and step_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class TuneTrace:
    """Per-iteration (epsilon, loss, gradient) records plus the outcome."""

    records: tuple
    epsilon_star: float
    reason: TerminationReason

    @property
    def n_iters(self) -> int:
        return len(self.records) - 1


def _log_denoms(abs_diffs: np.ndarray, epsilon: float, smoothing: SmoothingParams) -> np.ndarray:
    """L_i = log(exp(beta*eps) + E_i) for each row of an l x M |diff| matrix."""
    b = smoothing.beta
    if smoothing.variant is Variant.MAXEXP:
        inner = b * abs_diffs.max(axis=1)
    else:
        inner = np.logaddexp.reduce(b * abs_diffs, axis=1)
    return np.logaddexp(b * epsilon, inner)


def phi_beta(diffs, epsilon: float, beta: float, variant: Variant) -> float:
    """Kernel value in (0,1); 0.5 exactly when the competing exponents tie."""
    x = np.atleast_2d(np.asarray(diffs, dtype=float))
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("diffs must be finite and >= 0")
    L = _log_denoms(x, epsilon, SmoothingParams(beta, variant))
    return float(np.exp(beta * epsilon - L[0]))


def _query_diffs(agg: AggregationSet, query_preds) -> np.ndarray:
    q = np.asarray(query_preds, dtype=float)
    if q.shape != (agg.n_machines,):
        raise ValueError(f"query_preds must have length {agg.n_machines}")
    return np.abs(agg.machine_preds - q)


def smooth_weights(agg: AggregationSet, query_preds, epsilon: float,
                   smoothing: SmoothingParams) -> np.ndarray:
    """Unnormalized kernel weights, one phi_beta per aggregation row."""
    L = _log_denoms(_query_diffs(agg, query_preds), epsilon, smoothing)
    return np.exp(smoothing.beta * epsilon - L)


def smooth_predict(agg: AggregationSet, query_preds, epsilon: float,
                   smoothing: SmoothingParams) -> float:
    """Self-normalized weighted response mean; defined for every query."""
    L = _log_denoms(_query_diffs(agg, query_preds), epsilon, smoothing)
    w = np.exp(L.min() - L)  # shifted weights, max entry exactly 1
    return float((w @ agg.responses) / w.sum())


def _predict_and_slope(responses, abs_diffs, epsilon, smoothing):
    """(p, dp/d_eps) for one tuning row, all factors overflow-safe.

    With w_i = exp(-L_i) and dw_i/d_eps = -beta * phi_i * w_i, the
    quotient rule on p = sum(w*y)/sum(w) gives

        p' = -beta * (sum(phi*w*y)*sum(w) - sum(w*y)*sum(phi*w)) / sum(w)^2

    and the common shift exp(c - L_i) cancels top and bottom.
    """
    L = _log_denoms(abs_diffs, epsilon, smoothing)
    phi = np.exp(smoothing.beta * epsilon - L)
    w = np.exp(L.min() - L)
    y = responses
    A = w.sum()
    wy = w @ y
    pw = phi @ w
    pwy = (phi * w) @ y
    p = wy / A
    slope = -smoothing.beta * (pwy * A - wy * pw) / (A * A)
    return p, slope


def _check_self_pairing(tuning, agg, exclude_self):
    if not exclude_self:
        return
    if tuning.targets.size != agg.l:
        raise ValueError("exclude_self requires the tuning rows to be the aggregation rows")
    if agg.l < 2:
        raise ValueError("exclude_self needs at least 2 rows")


def _row_geometry(tuning, agg, j, exclude_self):
    """Aggregation-side arrays seen by tuning row j."""
    P = agg.machine_preds
    y = agg.responses
    if exclude_self:
        keep = np.arange(agg.l) != j
        P = P[keep]
        y = y[keep]
    return np.abs(P - tuning.machine_preds[j]), y


def squared_loss(tuning: TuningSet, agg: AggregationSet, epsilon: float,
                 smoothing: SmoothingParams, exclude_self: bool = False) -> float:
    """SL(eps) = sum over tuning rows of (p(eps; row) - target)^2.

    exclude_self drops row j's own aggregation row from its prediction,
    for the leave-one-out case where the tuning rows are the aggregation
    rows themselves.
    """
    _check_self_pairing(tuning, agg, exclude_self)
    total = 0.0
    for j in range(tuning.targets.size):
        diffs, y = _row_geometry(tuning, agg, j, exclude_self)
        L = _log_denoms(diffs, epsilon, smoothing)
        w = np.exp(L.min() - L)
        r = (w @ y) / w.sum() - tuning.targets[j]
        total += r * r
    return total


def loss_gradient(tuning: TuningSet, agg: AggregationSet, epsilon: float,
                  smoothing: SmoothingParams, exclude_self: bool = False) -> float:
    """Exact dSL/d_eps, including the chain-rule factor 2."""
    _check_self_pairing(tuning, agg, exclude_self)
    total = 0.0
    for j in range(tuning.targets.size):
        diffs, y = _row_geometry(tuning, agg, j, exclude_self)
        p, slope = _predict_and_slope(y, diffs, epsilon, smoothing)
        total += 2.0 * (p - tuning.targets[j]) * slope
    return total


def _loss_and_grad(tuning, agg, epsilon, smoothing, exclude_self=False):
    sl = 0.0
    g = 0.0
    for j in range(tuning.targets.size):
        diffs, y = _row_geometry(tuning, agg, j, exclude_self)
        p, slope = _predict_and_slope(y, diffs, epsilon, smoothing)
        r = p - tuning.targets[j]
        sl += r * r
        g += 2.0 * r * slope
    return sl, g


def scan_loss(tuning: TuningSet, agg: AggregationSet, candidates,
              smoothing: SmoothingParams, exclude_self: bool = False) -> np.ndarray:
    """SL evaluated on a ladder of epsilon values (coarse landscape probe)."""
    return np.array([squared_loss(tuning, agg, float(e), smoothing, exclude_self)
                     for e in candidates])


def tune_epsilon(tuning: TuningSet, agg: AggregationSet, smoothing: SmoothingParams,
                 config: GradientDescentConfig, exclude_self: bool = False) -> TuneTrace:
    """Projected gradient descent on SL(eps) over eps >= 0.

    The working learning rate persists across iterations: each iteration
    first doubles it, then halves it until the proposed step does not
    increase the loss.  Halving stops early once the step it would
    produce is already below step_tol, since such a step terminates the
    descent anyway.  Terminates on |SL'| < grad_tol, on |step| <
    step_tol, or at max_iters, in that order of checking.
    """
    _check_self_pairing(tuning, agg, exclude_self)
    eps = float(config.epsilon_init)
    lr = config.learning_rate
    sl, g = _loss_and_grad(tuning, agg, eps, smoothing, exclude_self)
    records = [(eps, sl, g)]
    reason = TerminationReason.MAX_ITERS
    for _ in range(config.max_iters):
        if abs(g) < config.grad_tol:
            reason = TerminationReason.GRAD_TOL
            break
        lr *= 2.0
        while True:
            cand = max(0.0, eps - lr * g)
            cand_sl = squared_loss(tuning, agg, cand, smoothing, exclude_self)
            if cand_sl <= sl or lr * abs(g) < config.step_tol:
                break
            lr *= 0.5
        step = abs(cand - eps)
        eps = cand
        sl, g = _loss_and_grad(tuning, agg, eps, smoothing, exclude_self)
        records.append((eps, sl, g))
        if step < config.step_tol:
            reason = TerminationReason.STEP_TOL
            break
    return TuneTrace(tuple(records), eps, reason)

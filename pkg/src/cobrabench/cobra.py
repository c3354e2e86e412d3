"""Discrete neighborhood aggregator over machine-prediction space.

A query point's prediction is the plain average of stored responses
whose machine predictions all fall within epsilon of the query's
(unanimous rule), or within epsilon for at least a fraction alpha of the
machines (relaxed rule).  An empty neighborhood yields 0 by the 0/0 = 0
convention; the batch API flags such rows so callers can react.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# slack for counting machines against M*alpha, so alpha = k/M grids
# survive float rounding; comparisons against epsilon itself stay exact
_ALPHA_SLACK = 1e-9


@dataclass(frozen=True)
class AggregationSet:
    """l x M machine predictions paired with the l held-out responses."""

    machine_preds: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.machine_preds, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        object.__setattr__(self, "machine_preds", P)
        object.__setattr__(self, "responses", y)
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise ValueError("machine_preds must be l x M with l >= 1, M >= 1")
        if y.shape != (P.shape[0],):
            raise ValueError("responses length must equal machine_preds row count")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(y))):
            raise ValueError("aggregation set contains a non-finite value")

    @property
    def l(self) -> int:
        return self.machine_preds.shape[0]

    @property
    def n_machines(self) -> int:
        return self.machine_preds.shape[1]


@dataclass(frozen=True)
class CobraParams:
    """Threshold epsilon plus agreement rule; alpha None means unanimous."""

    epsilon: float
    alpha: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError("epsilon must be finite and >= 0")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")

    def required_count(self, n_machines: int) -> int:
        """Minimum agreeing machines implied by alpha on an M-machine grid."""
        if self.alpha is None:
            return n_machines
        k = self.alpha * n_machines
        if abs(k - round(k)) > 1e-6:
            raise ValueError(f"alpha {self.alpha} is not on the grid {{1/M..1}} for M={n_machines}")
        return max(1, int(round(k)))


def _accept_mask(agg: AggregationSet, query_preds, params: CobraParams) -> np.ndarray:
    q = np.asarray(query_preds, dtype=float)
    if q.shape != (agg.n_machines,):
        raise ValueError(f"query_preds must have length {agg.n_machines}")
    if not np.all(np.isfinite(q)):
        raise ValueError("query_preds must be finite")
    close = np.abs(agg.machine_preds - q) <= params.epsilon
    if params.alpha is None:
        return close.all(axis=1)
    need = params.required_count(agg.n_machines)
    return close.sum(axis=1) >= need - _ALPHA_SLACK


def _normalize(mask: np.ndarray) -> np.ndarray:
    count = int(mask.sum())
    if count == 0:
        return np.zeros(mask.size)
    return mask.astype(float) / count


def discrete_weights(agg: AggregationSet, query_preds, params: CobraParams) -> np.ndarray:
    """Unanimous indicator weights, normalized to sum 1 (or all zero)."""
    if params.alpha is not None:
        raise ValueError("discrete_weights is the unanimous rule; use discrete_weights_alpha")
    return _normalize(_accept_mask(agg, query_preds, params))


def discrete_weights_alpha(agg: AggregationSet, query_preds, params: CobraParams) -> np.ndarray:
    """Relaxed weights: a row counts when >= M*alpha machines are within epsilon."""
    if params.alpha is None:
        raise ValueError("discrete_weights_alpha needs params.alpha set")
    return _normalize(_accept_mask(agg, query_preds, params))


def predict_discrete(agg: AggregationSet, query_preds, params: CobraParams) -> float:
    """Weighted response average; 0 for an empty neighborhood by convention."""
    mask = _accept_mask(agg, query_preds, params)
    count = int(mask.sum())
    if count == 0:
        return 0.0
    return float(agg.responses[mask].mean())


def predict_batch(agg: AggregationSet, query_matrix, params: CobraParams):
    """Rowwise predict_discrete.

    Returns (predictions, empty_flags); flagged rows carry the
    conventional 0 so callers can substitute something saner than a zero
    on real target scales.
    """
    Q = np.asarray(query_matrix, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != agg.n_machines:
        raise ValueError(f"query matrix must be n x {agg.n_machines}")
    preds = np.empty(Q.shape[0])
    empty = np.zeros(Q.shape[0], dtype=bool)
    for i in range(Q.shape[0]):
        mask = _accept_mask(agg, Q[i], params)
        count = int(mask.sum())
        if count == 0:
            preds[i] = 0.0
            empty[i] = True
        else:
            preds[i] = agg.responses[mask].mean()
    return preds, empty

"""Benchmark quantities: mean squared error, R squared, wall-clock timing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalReport:
    mse: float
    r2: float
    n: int


def mse(y_true, y_pred) -> float:
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("y_true and y_pred must be equal-length vectors")
    if t.size == 0:
        raise ValueError("mse of empty input is undefined")
    return float(np.mean((t - p) ** 2))


def r2(y_true, y_pred) -> float:
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("y_true and y_pred must be equal-length vectors")
    if t.size < 2:
        raise ValueError("r2 needs at least 2 points")
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot <= 0.0:
        raise ValueError("r2 undefined for a zero-variance target")
    ss_res = float(np.sum((t - p) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate(y_true, y_pred) -> EvalReport:
    return EvalReport(mse(y_true, y_pred), r2(y_true, y_pred), len(np.asarray(y_true)))


def timed(run):
    """Call run() and return (result, wall seconds at millisecond resolution)."""
    t0 = time.perf_counter()
    result = run()
    dt = time.perf_counter() - t0
    return result, round(dt, 3)

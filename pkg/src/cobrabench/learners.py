"""Three from-scratch weak learners behind one fit/predict contract.

Ridge solves penalized normal equations on centered data.  Lasso runs
cyclic coordinate descent with soft thresholding on internally
standardized features and reports coefficients in original units.  The
tree is a CART regressor with variance-reduction splits.  All fits are
deterministic; fitted models are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset


class LearnerKind(Enum):
    RIDGE = "ridge"
    LASSO = "lasso"
    TREE = "tree"


@dataclass(frozen=True)
class LearnerSpec:
    """Hyperparameters for one weak learner; only the active kind's fields matter."""

    kind: LearnerKind
    ridge_lambda: float = 1.0
    lasso_lambda: float = 0.1
    lasso_max_sweeps: int = 1000
    lasso_tol: float = 1e-6
    tree_max_depth: int = 6
    tree_min_leaf: int = 5

    def __post_init__(self):
        if self.ridge_lambda < 0 or self.lasso_lambda < 0:
            raise ValueError("penalty weights must be >= 0")
        if self.lasso_tol <= 0:
            raise ValueError("lasso_tol must be > 0")
        if self.lasso_max_sweeps < 1 or self.tree_min_leaf < 1 or self.tree_max_depth < 0:
            raise ValueError("counts out of range")


def default_specs() -> tuple:
    """The benchmark's three machines with default hyperparameters."""
    return (LearnerSpec(LearnerKind.RIDGE),
            LearnerSpec(LearnerKind.LASSO),
            LearnerSpec(LearnerKind.TREE))


@dataclass(frozen=True)
class RidgeModel:
    intercept: float
    coef: np.ndarray


@dataclass(frozen=True)
class LassoModel:
    intercept: float
    coef: np.ndarray
    converged: bool
    n_sweeps: int
    objective_history: tuple


@dataclass(frozen=True)
class TreeNode:
    feature: int
    threshold: float
    left: object
    right: object


@dataclass(frozen=True)
class TreeLeaf:
    value: float


@dataclass(frozen=True)
class TreeModel:
    root: object
    d: int


def fit_ridge(d_k: Dataset, lam: float) -> RidgeModel:
    """Solve (Xc'Xc + lam*I) beta = Xc'yc on centered data; intercept from the means."""
    X, y = d_k.features, d_k.targets
    mx = X.mean(axis=0)
    my = y.mean()
    Xc = X - mx
    yc = y - my
    if lam == 0.0 and np.linalg.matrix_rank(Xc) < X.shape[1]:
        raise ValueError("singular normal equations: collinear features need lambda > 0")
    G = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        beta = np.linalg.solve(G, Xc.T @ yc)
    except np.linalg.LinAlgError:
        raise ValueError("singular normal equations: collinear features need lambda > 0") from None
    return RidgeModel(float(my - mx @ beta), beta)


def _soft(z: float, t: float) -> float:
    return math.copysign(max(abs(z) - t, 0.0), z)


def fit_lasso(d_k: Dataset, lam: float, max_sweeps: int = 1000, tol: float = 1e-6) -> LassoModel:
    """Cyclic coordinate descent for (1/2n)||y - X beta||^2 + lam*||beta||_1.

    Features are standardized internally (so the penalty treats columns
    evenly) and the solution is mapped back to original units.  Stops
    when no coefficient moves more than tol over a full sweep, or after
    max_sweeps; the converged flag records which.  The objective value
    after every sweep is kept on the model, and coordinate descent
    guarantees it never increases.
    """
    X, y = d_k.features, d_k.targets
    n, d = X.shape
    mx = X.mean(axis=0)
    sx = X.std(axis=0)
    sx = np.where(sx > 0.0, sx, 1.0)
    Xs = (X - mx) / sx
    my = y.mean()
    yc = y - my
    col_sq = (Xs ** 2).mean(axis=0)  # 1 for live columns, 0 for constants

    beta = np.zeros(d)
    r = yc.copy()
    history = []
    converged = False
    sweeps_done = 0
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            bj = beta[j]
            rho = (Xs[:, j] @ r) / n + bj * col_sq[j]
            new = _soft(rho, lam) / col_sq[j]
            if new != bj:
                r -= Xs[:, j] * (new - bj)
                beta[j] = new
                max_delta = max(max_delta, abs(new - bj))
        sweeps_done += 1
        history.append(float(0.5 * (r @ r) / n + lam * np.abs(beta).sum()))
        if max_delta < tol:
            converged = True
            break

    coef = beta / sx
    return LassoModel(float(my - coef @ mx), coef, converged, sweeps_done, tuple(history))


def _build_node(X, y, depth, max_depth, min_leaf):
    n = y.size
    if depth >= max_depth or n < 2 * min_leaf or np.all(y == y[0]):
        return TreeLeaf(float(y.mean()))

    best_score = math.inf
    best = None  # (feature, threshold, left order mask)
    tot = y.sum()
    tot2 = (y ** 2).sum()
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        if xs[0] == xs[-1]:
            continue
        ys = y[order]
        cum = np.cumsum(ys)[:-1]
        cum2 = np.cumsum(ys ** 2)[:-1]
        k = np.arange(1, n)
        sse_left = cum2 - cum ** 2 / k
        sse_right = (tot2 - cum2) - (tot - cum) ** 2 / (n - k)
        score = sse_left + sse_right
        valid = (xs[1:] > xs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, math.inf)
        kbest = int(np.argmin(score))  # first minimum: lowest threshold wins ties
        if score[kbest] < best_score:
            best_score = float(score[kbest])
            thr = (xs[kbest] + xs[kbest + 1]) / 2.0
            best = (j, thr)

    if best is None:
        return TreeLeaf(float(y.mean()))
    j, thr = best
    mask = X[:, j] <= thr
    left = _build_node(X[mask], y[mask], depth + 1, max_depth, min_leaf)
    right = _build_node(X[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return TreeNode(j, float(thr), left, right)


def fit_tree(d_k: Dataset, max_depth: int = 6, min_leaf: int = 5) -> TreeModel:
    """CART regression: greedy splits minimizing summed child squared error.

    Split candidates sit at midpoints between consecutive distinct sorted
    feature values; both children must keep at least min_leaf rows.
    Ties break to the lowest feature index, then the lowest threshold.
    """
    root = _build_node(d_k.features, d_k.targets, 0, max_depth, min_leaf)
    return TreeModel(root, d_k.d)


def _walk(node, x):
    while isinstance(node, TreeNode):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def predict(model, X) -> np.ndarray:
    """Deterministic predictions for a fitted model on rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    if isinstance(model, (RidgeModel, LassoModel)):
        if X.shape[1] != model.coef.size:
            raise ValueError(f"X has {X.shape[1]} columns, model expects {model.coef.size}")
        return X @ model.coef + model.intercept
    if isinstance(model, TreeModel):
        if X.shape[1] != model.d:
            raise ValueError(f"X has {X.shape[1]} columns, model expects {model.d}")
        return np.array([_walk(model.root, row) for row in X])
    raise TypeError(f"not a fitted model: {type(model).__name__}")


def predict_all(models, X) -> np.ndarray:
    """n_points x M matrix; column m holds predict(models[m], X)."""
    return np.column_stack([predict(m, X) for m in models])


def fit_learner(spec: LearnerSpec, d_k: Dataset):
    if spec.kind is LearnerKind.RIDGE:
        return fit_ridge(d_k, spec.ridge_lambda)
    if spec.kind is LearnerKind.LASSO:
        return fit_lasso(d_k, spec.lasso_lambda, spec.lasso_max_sweeps, spec.lasso_tol)
    return fit_tree(d_k, spec.tree_max_depth, spec.tree_min_leaf)


def _node_to_dict(node):
    if isinstance(node, TreeLeaf):
        return {"value": node.value}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(obj):
    if "value" in obj:
        return TreeLeaf(obj["value"])
    return TreeNode(obj["feature"], obj["threshold"],
                    _node_from_dict(obj["left"]), _node_from_dict(obj["right"]))


def to_json(model) -> str:
    """Serialize a fitted model to the documented JSON text schema."""
    if isinstance(model, RidgeModel):
        obj = {"kind": "ridge", "intercept": model.intercept, "coef": model.coef.tolist()}
    elif isinstance(model, LassoModel):
        obj = {"kind": "lasso", "intercept": model.intercept, "coef": model.coef.tolist(),
               "converged": model.converged, "n_sweeps": model.n_sweeps}
    elif isinstance(model, TreeModel):
        obj = {"kind": "tree", "d": model.d, "root": _node_to_dict(model.root)}
    else:
        raise TypeError(f"not a fitted model: {type(model).__name__}")
    return json.dumps(obj, sort_keys=True)


def from_json(text: str):
    obj = json.loads(text)
    kind = obj.get("kind")
    if kind == "ridge":
        return RidgeModel(obj["intercept"], np.asarray(obj["coef"], dtype=float))
    if kind == "lasso":
        return LassoModel(obj["intercept"], np.asarray(obj["coef"], dtype=float),
                          obj["converged"], obj["n_sweeps"], ())
    if kind == "tree":
        return TreeModel(_node_from_dict(obj["root"]), obj["d"])
    raise ValueError(f"unknown model kind: {kind!r}")

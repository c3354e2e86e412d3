"""Baseline epsilon selection: grid and randomized search under k-fold CV.

Every candidate is scored by cv_score, which refits the weak learners
inside each fold, so a 60-point grid honestly costs twice a 30-draw
randomized search on the same fold plan.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cobra import AggregationSet, CobraParams, predict_batch
from .data import Dataset, split_for_cobra
from .learners import fit_learner, predict_all
from .metrics import mse


@dataclass(frozen=True)
class FoldPlan:
    n: int
    k: int
    seed: int
    assignment: np.ndarray

    @property
    def fold_sizes(self) -> tuple:
        return tuple(int(np.sum(self.assignment == f)) for f in range(self.k))


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffled balanced assignment; fold sizes differ by at most 1."""
    if not 2 <= k <= n:
        raise ValueError(f"fold count {k} out of range [2, {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.intp)
    assignment[perm] = np.arange(n) % k
    return FoldPlan(n, k, seed, assignment)


@dataclass(frozen=True)
class SearchSpace:
    """Either an explicit candidate ladder or a range to draw from."""

    epsilon_candidates: tuple | None = None
    epsilon_range: tuple | None = None
    n_draws: int = 0
    seed: int = 0
    alpha_candidates: tuple | None = None

    def __post_init__(self):
        if (self.epsilon_candidates is None) == (self.epsilon_range is None):
            raise ValueError("exactly one of epsilon_candidates / epsilon_range must be set")
        if self.epsilon_candidates is not None:
            cand = tuple(float(e) for e in self.epsilon_candidates)
            if not cand or any(e < 0 for e in cand) or list(cand) != sorted(cand):
                raise ValueError("epsilon_candidates must be a non-empty sorted ladder of reals >= 0")
            object.__setattr__(self, "epsilon_candidates", cand)
        else:
            lo, hi = self.epsilon_range
            if not 0 <= lo <= hi:
                raise ValueError("epsilon_range must satisfy 0 <= lo <= hi")
            if self.n_draws < 1:
                raise ValueError("n_draws must be >= 1 for a range space")
        if self.alpha_candidates is not None:
            alphas = tuple(float(a) for a in self.alpha_candidates)
            if not alphas or any(not 0 < a <= 1 for a in alphas):
                raise ValueError("alpha_candidates must lie in (0, 1]")
            object.__setattr__(self, "alpha_candidates", alphas)


def grid_space(candidates, alphas=None) -> SearchSpace:
    return SearchSpace(epsilon_candidates=tuple(candidates), alpha_candidates=alphas)


def random_space(lo: float, hi: float, n_draws: int, seed: int, alphas=None) -> SearchSpace:
    return SearchSpace(epsilon_range=(float(lo), float(hi)), n_draws=n_draws,
                       seed=seed, alpha_candidates=alphas)


@dataclass(frozen=True)
class SearchResult:
    best_epsilon: float
    best_alpha: float | None
    cv_mse: float
    table: tuple  # rows of (epsilon, alpha, cv_mse)
    wall_time: float


def _fold_seed(plan: FoldPlan, fold: int) -> int:
    return int(np.random.SeedSequence([plan.seed, fold]).generate_state(1)[0])


def cv_score(train: Dataset, learner_specs, params: CobraParams, folds: FoldPlan,
             machine_fraction: float = 0.5) -> float:
    """Mean held-out-fold MSE of the discrete aggregator.

    Each fold refits every learner on its own machine-training half and
    aggregates over its own aggregation half; held-out rows never touch
    either.  Empty neighborhoods keep their conventional 0 prediction
    here, so uselessly small epsilons are punished by the score itself.
    """
    if folds.n != train.n_rows:
        raise ValueError("fold plan was built for a different row count")
    scores = []
    for f in range(folds.k):
        held = folds.assignment == f
        infold = train.take(np.nonzero(~held)[0])
        d_k, d_l = split_for_cobra(infold, machine_fraction, _fold_seed(folds, f))
        models = [fit_learner(s, d_k) for s in learner_specs]
        agg = AggregationSet(predict_all(models, d_l.features), d_l.targets)
        held_ds = train.take(np.nonzero(held)[0])
        preds, _ = predict_batch(agg, predict_all(models, held_ds.features), params)
        scores.append(mse(held_ds.targets, preds))
    return float(np.mean(scores))


def _run_candidates(train, learner_specs, pairs, folds, machine_fraction, threads=1):
    t0 = time.perf_counter()
    score_one = lambda pair: cv_score(train, learner_specs, CobraParams(*pair),
                                      folds, machine_fraction)
    if threads > 1:
        # candidates are independent; map preserves order so the result
        # is identical to the sequential path
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            scores = list(ex.map(score_one, pairs))
    else:
        scores = [score_one(pair) for pair in pairs]
    table = []
    best_key = None
    best_pair = None
    for (eps, alpha), score in zip(pairs, scores):
        table.append((eps, alpha, score))
        key = (score, eps, 1.0 if alpha is None else alpha)
        if best_key is None or key < best_key:
            best_key = key
            best_pair = (eps, alpha)
    wall = time.perf_counter() - t0
    return SearchResult(best_pair[0], best_pair[1], best_key[0], tuple(table), wall)


def grid_search(train: Dataset, learner_specs, space: SearchSpace, folds: FoldPlan,
                machine_fraction: float = 0.5, threads: int = 1) -> SearchResult:
    """Exhaustive cv_score over the ladder; ties go to smaller epsilon, then alpha."""
    if space.epsilon_candidates is None:
        raise ValueError("grid_search needs the candidate-ladder form of SearchSpace")
    alphas = space.alpha_candidates if space.alpha_candidates is not None else (None,)
    pairs = [(e, a) for e in space.epsilon_candidates for a in alphas]
    return _run_candidates(train, learner_specs, pairs, folds, machine_fraction, threads)


def randomized_search(train: Dataset, learner_specs, space: SearchSpace, folds: FoldPlan,
                      machine_fraction: float = 0.5, threads: int = 1) -> SearchResult:
    """Uniform draws from the range, scored like grid_search; deterministic per seed."""
    if space.epsilon_range is None:
        raise ValueError("randomized_search needs the range form of SearchSpace")
    rng = np.random.default_rng(space.seed)
    lo, hi = space.epsilon_range
    eps_draws = rng.uniform(lo, hi, space.n_draws)
    if space.alpha_candidates is not None:
        alpha_draws = rng.choice(np.asarray(space.alpha_candidates), size=space.n_draws)
        pairs = [(float(e), float(a)) for e, a in zip(eps_draws, alpha_draws)]
    else:
        pairs = [(float(e), None) for e in eps_draws]
    return _run_candidates(train, learner_specs, pairs, folds, machine_fraction, threads)


def table_to_csv(result: SearchResult, path: str) -> None:
    """Write the per-candidate score table (epsilon, alpha, cv_mse)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epsilon,alpha,cv_mse\n")
        for eps, alpha, score in result.table:
            a = "" if alpha is None else f"{alpha:.9f}"
            fh.write(f"{eps:.9f},{a},{score:.9f}\n")

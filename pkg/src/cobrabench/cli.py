"""Benchmark driver: split, fit, tune, evaluate, and write report files.

Subcommands:
  run      full pipeline for one tuner; writes metrics.csv, summary.json,
           scatter.csv and (controlled tuner) trace.csv
  scatter  regenerate scatter.csv for a completed run directory
  compare  run several tuners on identical splits; writes tuners.csv

All randomness flows from the single --seed via fixed stage indices (see
stage_seed), so two runs with equal configs produce byte-identical
non-timing outputs.  Exit codes: 0 success, 1 usage error, 2 pipeline
error.
"""

from __future__ import annotations

import argparse
import gc
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from .cobra import AggregationSet, CobraParams, predict_batch
from .data import (SplitSpec, load_csv, split_for_cobra, standardize_apply,
                   standardize_fit, subsample, train_test_split)
from .learners import LearnerKind, LearnerSpec, fit_learner, predict_all
from .metrics import mse, r2
from .search import grid_search, grid_space, make_folds, random_space, randomized_search
from .smooth import (GradientDescentConfig, SmoothingParams, TuneTrace, TuningSet,
                     Variant, scan_loss, tune_epsilon)

TUNERS = ("controlled", "grid", "random")

# stage indices for deriving per-stage seeds from the root seed
STAGE_SUBSAMPLE = 0
STAGE_SPLIT = 1
STAGE_MACHINES = 2
STAGE_TUNE_SPLIT = 3
STAGE_FOLDS = 4
STAGE_RANDOM_SEARCH = 5


def stage_seed(root: int, stage: int) -> int:
    """Stable 32-bit sub-seed: SeedSequence([root, stage])."""
    return int(np.random.SeedSequence([root, stage]).generate_state(1)[0])


@dataclass(frozen=True)
class RunConfig:
    data: str
    target: str
    out: str
    subsample_n: int | None = None
    seed: int = 0
    train_frac: float = 0.8
    machine_frac: float = 0.5
    tuner: str = "controlled"
    beta: float = 50.0
    variant: str = "sumexp"
    lr: float = 0.1
    max_iters: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-8
    scan_points: int = 96
    gd_starts: int = 10
    tune_cap: int = 100
    grid_size: int = 60
    random_draws: int = 30
    alpha_search: bool = False
    threads: int = 1
    standardize: bool = True
    tune_on_agg: bool = False
    ridge_lambda: float = 1.0
    lasso_lambda: float = 0.1
    lasso_sweeps: int = 1000
    lasso_tol: float = 1e-6
    tree_depth: int = 6
    tree_min_leaf: int = 5

    def learner_specs(self) -> tuple:
        return (LearnerSpec(LearnerKind.RIDGE, ridge_lambda=self.ridge_lambda),
                LearnerSpec(LearnerKind.LASSO, lasso_lambda=self.lasso_lambda,
                            lasso_max_sweeps=self.lasso_sweeps, lasso_tol=self.lasso_tol),
                LearnerSpec(LearnerKind.TREE, tree_max_depth=self.tree_depth,
                            tree_min_leaf=self.tree_min_leaf))

    def smoothing(self) -> SmoothingParams:
        return SmoothingParams(self.beta, Variant(self.variant))


LEARNER_LABELS = ("ridge", "lasso", "tree")


@dataclass
class RunState:
    """Everything the writers need after a completed pipeline."""

    config: RunConfig
    n_rows: int
    d: int
    sizes: dict
    learner_mse: list
    learner_r2: list
    epsilon_star: float
    alpha: float | None
    cobra_mse: float
    cobra_r2: float
    n_empty: int
    y_true: np.ndarray
    y_pred: np.ndarray
    trace: TuneTrace | None
    cv_mse: float | None
    fit_seconds: float
    tune_seconds: float
    total_seconds: float = 0.0


class PipelineError(RuntimeError):
    pass


def _loo_risk(pair_gaps, responses, epsilons, fallback):
    """Leave-one-out squared risk of the DISCRETE aggregator per epsilon.

    pair_gaps is the l x l matrix of max-over-machines prediction gaps
    with the diagonal set to inf; empty neighborhoods fall back to the
    response mean, exactly as the pipeline's deployed predictor does.
    """
    out = np.empty(len(epsilons))
    for i, eps in enumerate(epsilons):
        inside = pair_gaps <= eps
        counts = inside.sum(axis=1)
        preds = np.where(counts > 0, (inside @ responses) / np.maximum(counts, 1), fallback)
        out[i] = float(np.mean((preds - responses) ** 2))
    return out


def _tune_controlled(cfg, d_l, preds_dl):
    """Threshold selection for the deployed discrete aggregator.

    Three stages on the aggregation rows, all leave-one-out so no row
    ever matches itself:

      1. discrete risk over a quantile ladder of the pairwise prediction
         gaps, then a second pass probing actual gap values around the
         ladder minimum (the risk curve is a step function whose
         breakpoints are exactly the pairwise gaps, so those are the
         only epsilons where it can move);
      2. gradient descents on the smoothed loss, launched from the most
         promising well-separated scan points until the max_iters budget
         of iterations is spent; each descent is capped at
         max_iters/gd_starts and the smooth objective runs on a
         size-capped row subset because its per-evaluation cost is
         quadratic in rows;
      3. the candidate with the lowest full-geometry discrete risk among
         everything scanned and visited wins (ties to the smaller eps).

    The returned trace records the descent that produced the winner (or
    came closest to it), so its termination reason is a genuine one.

    --tune-on-agg instead reuses the aggregation rows with self-pairs
    included: each row matches itself at distance 0, which drags the
    tuned epsilon toward 0 (kept as an inspectable baseline).
    --scan-points 0 skips stage 1 and descends once from the midpoint
    of the gap range, reporting that descent's endpoint unvetoed.
    """
    smoothing = cfg.smoothing()
    if cfg.tune_on_agg:
        agg_t = AggregationSet(preds_dl, d_l.targets)
        tun = TuningSet(preds_dl, d_l.targets)
        eps_hi = float(np.abs(tun.machine_preds[:, None, :]
                              - agg_t.machine_preds[None, :, :]).max())
        if cfg.scan_points > 0:
            ladder = np.linspace(0.0, eps_hi, cfg.scan_points)
            losses = scan_loss(tun, agg_t, ladder, smoothing)
            eps_init = float(ladder[int(np.argmin(losses))])
        else:
            eps_init = eps_hi / 2.0  # midpoint rule
        gd = GradientDescentConfig(eps_init, cfg.lr, cfg.max_iters, cfg.grad_tol, cfg.step_tol)
        return tune_epsilon(tun, agg_t, smoothing, gd)

    P = preds_dl
    Y = d_l.targets
    l = P.shape[0]
    if l < 2:
        raise PipelineError("aggregation set needs at least 2 rows to tune a threshold")
    if cfg.gd_starts < 1:
        raise PipelineError("gd_starts must be >= 1")
    gaps = np.abs(P[:, None, :] - P[None, :, :]).max(axis=2)
    np.fill_diagonal(gaps, np.inf)
    finite = np.sort(gaps[np.isfinite(gaps)])
    fallback = float(Y.mean())

    cap = min(max(cfg.tune_cap, 2), l)
    if cap < l:
        rows = np.random.default_rng(stage_seed(cfg.seed, STAGE_TUNE_SPLIT)).permutation(l)[:cap]
        rows.sort()
        sub_P, sub_Y = P[rows], Y[rows]
    else:
        sub_P, sub_Y = P, Y
    tun = TuningSet(sub_P, sub_Y)
    agg_t = AggregationSet(sub_P, sub_Y)

    if cfg.scan_points <= 0:
        # plain single descent, no scan, no veto
        gd = GradientDescentConfig(float(finite[-1]) / 2.0, cfg.lr, cfg.max_iters,
                                   cfg.grad_tol, cfg.step_tol)
        return tune_epsilon(tun, agg_t, smoothing, gd, exclude_self=True)

    ladder = np.unique(np.quantile(finite, np.linspace(0.0, 1.0, cfg.scan_points)))
    risks = _loo_risk(gaps, Y, ladder, fallback)
    k = int(np.argmin(risks))
    lo = float(ladder[k - 1]) if k > 0 else 0.0
    hi = float(ladder[k + 1]) if k + 1 < ladder.size else float(finite[-1])
    # The risk is piecewise constant with breakpoints at the pairwise
    # gaps, so refine by probing actual breakpoints around the coarse
    # argmin; thin evenly when the window holds more than the budget.
    window = np.unique(finite[(finite >= lo) & (finite <= hi)])
    fine_budget = 8 * cfg.scan_points
    if window.size > fine_budget:
        picks = np.linspace(0, window.size - 1, fine_budget).astype(int)
        window = window[picks]
    if window.size:
        scan_eps = np.concatenate([ladder, window])
        scan_risk = np.concatenate([risks, _loo_risk(gaps, Y, window, fallback)])
        scan_eps, first = np.unique(scan_eps, return_index=True)
        scan_risk = scan_risk[first]
    else:
        scan_eps, scan_risk = ladder, risks

    # Spend up to max_iters gradient iterations across descents launched
    # from the best-ranked scan points, keeping starts spaced apart so
    # they probe distinct basins; the spacing relaxes once no admissible
    # point remains.  Steps finer than the scan resolution cannot move
    # the risk argmin, so each descent stops at that granularity.
    span = float(scan_eps[-1]) - float(scan_eps[0])
    step_floor = max(cfg.step_tol, span * 1e-4)
    per_start = max(1, cfg.max_iters // max(1, cfg.gd_starts))
    order = np.argsort(scan_risk, kind="stable")
    spread = span / (2.0 * cfg.gd_starts)
    used = []
    traces = []
    budget = cfg.max_iters
    while budget > 0:
        start = None
        for idx in order:
            e = float(scan_eps[idx])
            if e not in used and all(abs(e - u) >= spread for u in used):
                start = e
                break
        if start is None:
            if len(used) == scan_eps.size or spread < 1e-12:
                break
            spread /= 2.0
            continue
        used.append(start)
        gd = GradientDescentConfig(start, cfg.lr, min(per_start, budget),
                                   cfg.grad_tol, step_floor)
        tr = tune_epsilon(tun, agg_t, smoothing, gd, exclude_self=True)
        budget -= tr.n_iters
        traces.append(tr)

    visited = sorted({float(e) for t in traces for (e, _, _) in t.records})
    cand = np.unique(np.concatenate([scan_eps, np.asarray(visited)]))
    eps_star = float(cand[int(np.argmin(_loo_risk(gaps, Y, cand, fallback)))])

    chosen = None
    for t in traces:
        if any(e == eps_star for (e, _, _) in t.records):
            chosen = t
            break
    if chosen is None:
        chosen = min(traces, key=lambda t: min(abs(e - eps_star) for (e, _, _) in t.records))
    return TuneTrace(chosen.records, eps_star, chosen.reason)


def _search_space_bounds(preds_dl) -> float:
    # widest per-machine prediction spread on the aggregation rows
    return float((preds_dl.max(axis=0) - preds_dl.min(axis=0)).max())


def _alpha_grid(n_machines: int) -> tuple:
    return tuple((k + 1) / n_machines for k in range(n_machines))


def run_pipeline(cfg: RunConfig) -> RunState:
    t_start = time.perf_counter()
    ds = load_csv(cfg.data, cfg.target)
    if cfg.subsample_n is not None:
        ds = subsample(ds, cfg.subsample_n, stage_seed(cfg.seed, STAGE_SUBSAMPLE))
    train, test = train_test_split(ds, SplitSpec(cfg.train_frac, stage_seed(cfg.seed, STAGE_SPLIT)))
    if cfg.standardize:
        norm = standardize_fit(train)
        train = standardize_apply(train, norm)
        test = standardize_apply(test, norm)
    d_k, d_l = split_for_cobra(train, cfg.machine_frac, stage_seed(cfg.seed, STAGE_MACHINES))

    specs = cfg.learner_specs()
    t0 = time.perf_counter()
    models = [fit_learner(s, d_k) for s in specs]
    fit_seconds = time.perf_counter() - t0

    preds_dl = predict_all(models, d_l.features)
    preds_test = predict_all(models, test.features)
    agg_full = AggregationSet(preds_dl, d_l.targets)

    learner_mse = [mse(test.targets, preds_test[:, m]) for m in range(len(models))]
    learner_r2 = [r2(test.targets, preds_test[:, m]) for m in range(len(models))]

    trace = None
    cv_best = None
    alpha = None
    t0 = time.perf_counter()
    if cfg.tuner == "controlled":
        if cfg.alpha_search:
            print("note: --alpha-search applies to grid/random tuners; ignored", file=sys.stderr)
        trace = _tune_controlled(cfg, d_l, preds_dl)
        epsilon_star = trace.epsilon_star
    elif cfg.tuner in ("grid", "random"):
        folds = make_folds(train.n_rows, 5, stage_seed(cfg.seed, STAGE_FOLDS))
        hi = _search_space_bounds(preds_dl)
        alphas = _alpha_grid(len(models)) if cfg.alpha_search else None
        if cfg.tuner == "grid":
            space = grid_space(np.linspace(0.0, hi, cfg.grid_size), alphas)
            res = grid_search(train, specs, space, folds, cfg.machine_frac, cfg.threads)
        else:
            space = random_space(0.0, hi, cfg.random_draws,
                                 stage_seed(cfg.seed, STAGE_RANDOM_SEARCH), alphas)
            res = randomized_search(train, specs, space, folds, cfg.machine_frac, cfg.threads)
        epsilon_star = res.best_epsilon
        alpha = res.best_alpha
        cv_best = res.cv_mse
    else:
        raise PipelineError(f"unknown tuner {cfg.tuner!r}")
    tune_seconds = time.perf_counter() - t0

    params = CobraParams(epsilon_star, alpha)
    cobra_preds, empty = predict_batch(agg_full, preds_test, params)
    n_empty = int(empty.sum())
    if n_empty:
        # no-evidence rows fall back to the aggregation-set response mean
        # (the eps -> inf limit) instead of the conventional 0
        cobra_preds = cobra_preds.copy()
        cobra_preds[empty] = agg_full.responses.mean()

    state = RunState(
        config=cfg,
        n_rows=ds.n_rows,
        d=ds.d,
        sizes={"train": train.n_rows, "test": test.n_rows,
               "machine_training": d_k.n_rows, "aggregation": d_l.n_rows},
        learner_mse=learner_mse,
        learner_r2=learner_r2,
        epsilon_star=float(epsilon_star),
        alpha=alpha,
        cobra_mse=mse(test.targets, cobra_preds),
        cobra_r2=r2(test.targets, cobra_preds),
        n_empty=n_empty,
        y_true=test.targets,
        y_pred=cobra_preds,
        trace=trace,
        cv_mse=cv_best,
        fit_seconds=fit_seconds,
        tune_seconds=tune_seconds,
    )
    state.total_seconds = time.perf_counter() - t_start
    return state


def _config_dict(cfg: RunConfig) -> dict:
    d = dict(cfg.__dict__)
    return d


def _summary_dict(state: RunState) -> dict:
    cfg = state.config
    return {
        "dataset": {"path": cfg.data, "target": cfg.target,
                    "n_rows": state.n_rows, "d": state.d,
                    "subsample": cfg.subsample_n},
        "config": _config_dict(cfg),
        "sizes": state.sizes,
        "learners": {label: {"mse": state.learner_mse[i], "r2": state.learner_r2[i]}
                     for i, label in enumerate(LEARNER_LABELS)},
        "cobra": {
            "epsilon_star": state.epsilon_star,
            "alpha": state.alpha,
            "mse": state.cobra_mse,
            "r2": state.cobra_r2,
            "empty_neighborhoods": state.n_empty,
            "termination_reason": state.trace.reason.value if state.trace else None,
            "tuner_iterations": state.trace.n_iters if state.trace else None,
            "cv_mse": state.cv_mse,
        },
        "timings": {"fit_seconds": round(state.fit_seconds, 3),
                    "tune_seconds": round(state.tune_seconds, 3),
                    "total_seconds": round(state.total_seconds, 3)},
    }


def _write_metrics_csv(state: RunState, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("estimator,mse,r2\n")
        for i, label in enumerate(LEARNER_LABELS):
            fh.write(f"{label},{state.learner_mse[i]:.9f},{state.learner_r2[i]:.9f}\n")
        fh.write(f"cobra,{state.cobra_mse:.9f},{state.cobra_r2:.9f}\n")


def _write_metrics_text(state: RunState, path: str) -> None:
    rows = [(label, state.learner_mse[i], state.learner_r2[i])
            for i, label in enumerate(LEARNER_LABELS)]
    rows.append(("cobra", state.cobra_mse, state.cobra_r2))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{'estimator':<12}{'mse':>18}{'r2':>16}\n")
        for label, m, r in rows:
            fh.write(f"{label:<12}{m:>18.9f}{r:>16.9f}\n")


def _write_scatter_csv(state: RunState, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("y_true,y_pred\n")
        for t, p in zip(state.y_true, state.y_pred):
            fh.write(f"{t:.9f},{p:.9f}\n")


def _write_trace_csv(trace: TuneTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,epsilon,loss,gradient\n")
        for i, (eps, sl, g) in enumerate(trace.records):
            fh.write(f"{i},{eps:.9g},{sl:.9g},{g:.9g}\n")


def _write_summary_json(state: RunState, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_summary_dict(state), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_benchmark(cfg: RunConfig) -> RunState:
    """Full pipeline plus report files; partial outputs removed on failure."""
    state = run_pipeline(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    written = []
    try:
        targets = [("metrics.csv", lambda p: _write_metrics_csv(state, p)),
                   ("metrics.txt", lambda p: _write_metrics_text(state, p)),
                   ("summary.json", lambda p: _write_summary_json(state, p)),
                   ("scatter.csv", lambda p: _write_scatter_csv(state, p))]
        if state.trace is not None:
            targets.append(("trace.csv", lambda p: _write_trace_csv(state.trace, p)))
        for name, writer in targets:
            path = os.path.join(cfg.out, name)
            writer(path)
            written.append(path)
    except Exception:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return state


def emit_scatter(out_dir: str) -> str:
    """Regenerate scatter.csv for a completed run directory.

    Reads the stored config out of summary.json and replays the
    deterministic pipeline, so the rewritten file matches the original
    byte for byte.
    """
    summary_path = os.path.join(out_dir, "summary.json")
    if not os.path.exists(summary_path):
        raise FileNotFoundError(f"no completed run in {out_dir}: summary.json missing")
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    cfg = RunConfig(**summary["config"])
    state = run_pipeline(cfg)
    path = os.path.join(out_dir, "scatter.csv")
    _write_scatter_csv(state, path)
    return path


def compare_tuners(cfg: RunConfig, tuners, repeats: int = 1) -> list:
    """Run each tuner on identical splits and collect the comparison rows.

    Tuning wall time is the median over `repeats` executions, measured
    with the garbage collector paused so a collection pause landing
    inside one tuner's window cannot skew the comparison.  All
    non-timing fields are deterministic given the config, so repeats
    only stabilize the clock.
    """
    tuners = list(tuners)
    if len(tuners) < 2:
        raise ValueError("comparison needs at least 2 tuners")
    for t in tuners:
        if t not in TUNERS:
            raise ValueError(f"unknown tuner {t!r}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows = []
    for t in tuners:
        walls = []
        state = None
        for _ in range(repeats):
            gc.collect()
            was_enabled = gc.isenabled()
            gc.disable()
            try:
                state = run_pipeline(replace(cfg, tuner=t))
            finally:
                if was_enabled:
                    gc.enable()
            walls.append(state.tune_seconds)
        rows.append((t, statistics.median(walls), state.epsilon_star,
                     state.cobra_mse, state.cobra_r2))
    return rows


def _write_tuners_csv(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tuner,wall_seconds,epsilon_star,test_mse,test_r2\n")
        for t, wall, eps, m, r in rows:
            fh.write(f"{t},{wall:.3f},{eps:.9f},{m:.9f},{r:.9f}\n")


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--subsample", type=int, default=None, metavar="N",
                   help="draw N rows without replacement before splitting")
    p.add_argument("--seed", type=int, default=0, help="root seed for every stage")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--machine-frac", type=float, default=0.5,
                   help="fraction of training rows that fit the machines")
    p.add_argument("--beta", type=float, default=50.0, help="kernel steepness")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="sumexp")
    p.add_argument("--lr", type=float, default=0.1, help="tuner learning rate")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--step-tol", type=float, default=1e-8)
    p.add_argument("--scan-points", type=int, default=96,
                   help="quantile ladder size for the threshold scan (0 = plain "
                        "midpoint-start descent, no scan)")
    p.add_argument("--gd-starts", type=int, default=10,
                   help="per-descent iteration cap is max-iters/gd-starts; "
                        "descents launch from ranked scan points until the "
                        "max-iters budget is spent")
    p.add_argument("--tune-cap", type=int, default=100,
                   help="row cap for the smooth-loss descents (scan and final "
                        "selection always use every aggregation row)")
    p.add_argument("--grid-size", type=int, default=60)
    p.add_argument("--random-draws", type=int, default=30)
    p.add_argument("--alpha-search", action="store_true",
                   help="search the agreement fraction alongside epsilon (grid/random)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for candidate evaluation (outputs are unchanged)")
    p.add_argument("--no-standardize", action="store_true",
                   help="skip feature standardization before fitting")
    p.add_argument("--tune-on-agg", action="store_true",
                   help="tune on the aggregation rows themselves (self-matching; see README)")
    p.add_argument("--ridge-lambda", type=float, default=1.0)
    p.add_argument("--lasso-lambda", type=float, default=0.1)
    p.add_argument("--lasso-sweeps", type=int, default=1000)
    p.add_argument("--lasso-tol", type=float, default=1e-6)
    p.add_argument("--tree-depth", type=int, default=6)
    p.add_argument("--tree-min-leaf", type=int, default=5)
    p.add_argument("--out", required=True, help="output directory")


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        data=args.data, target=args.target, out=args.out,
        subsample_n=args.subsample, seed=args.seed,
        train_frac=args.train_frac, machine_frac=args.machine_frac,
        tuner=getattr(args, "tuner", "controlled"),
        beta=args.beta, variant=args.variant, lr=args.lr,
        max_iters=args.max_iters, grad_tol=args.grad_tol, step_tol=args.step_tol,
        scan_points=args.scan_points, gd_starts=args.gd_starts,
        tune_cap=args.tune_cap, grid_size=args.grid_size,
        random_draws=args.random_draws, alpha_search=args.alpha_search,
        threads=args.threads, standardize=not args.no_standardize,
        tune_on_agg=args.tune_on_agg,
        ridge_lambda=args.ridge_lambda, lasso_lambda=args.lasso_lambda,
        lasso_sweeps=args.lasso_sweeps, lasso_tol=args.lasso_tol,
        tree_depth=args.tree_depth, tree_min_leaf=args.tree_min_leaf,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="cobrabench",
                     description="housing benchmark for neighborhood-aggregated regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the benchmark once")
    _add_common_flags(p_run)
    p_run.add_argument("--tuner", choices=TUNERS, default="controlled")

    p_scatter = sub.add_parser("scatter", help="regenerate scatter.csv for a finished run")
    p_scatter.add_argument("--out", required=True, help="directory of a completed run")

    p_cmp = sub.add_parser("compare", help="time several tuners on identical splits")
    _add_common_flags(p_cmp)
    p_cmp.add_argument("--tuners", default="controlled,grid,random",
                       help="comma-separated subset of controlled,grid,random (>= 2)")
    p_cmp.add_argument("--timing-repeats", type=int, default=1,
                       help="median tuning wall over this many executions")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            if not os.path.exists(cfg.data):
                parser.error(f"dataset file not found: {cfg.data}")
            state = run_benchmark(cfg)
            print(f"epsilon_star={state.epsilon_star:.6f}  "
                  f"cobra_mse={state.cobra_mse:.6f}  cobra_r2={state.cobra_r2:.6f}")
            print(f"reports written to {cfg.out}")
        elif args.command == "scatter":
            try:
                path = emit_scatter(args.out)
            except FileNotFoundError as e:
                parser.error(str(e))
            print(f"wrote {path}")
        elif args.command == "compare":
            cfg = _config_from_args(args)
            if not os.path.exists(cfg.data):
                parser.error(f"dataset file not found: {cfg.data}")
            tuners = [t.strip() for t in args.tuners.split(",") if t.strip()]
            if len(tuners) < 2:
                parser.error("--tuners needs at least 2 entries")
            for t in tuners:
                if t not in TUNERS:
                    parser.error(f"unknown tuner {t!r}")
            if args.timing_repeats < 1:
                parser.error("--timing-repeats must be >= 1")
            try:
                rows = compare_tuners(cfg, tuners, repeats=args.timing_repeats)
            except ValueError as e:
                parser.error(str(e))
            os.makedirs(cfg.out, exist_ok=True)
            path = os.path.join(cfg.out, "tuners.csv")
            _write_tuners_csv(rows, path)
            for t, wall, eps, m, r in rows:
                print(f"{t:<12}{wall:>9.3f}s  eps*={eps:<12.6f} mse={m:<14.6f} r2={r:.6f}")
            print(f"wrote {path}")
        return 0
    except SystemExit:
        raise
    except Exception as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

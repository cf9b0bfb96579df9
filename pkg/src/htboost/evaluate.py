"""Metrics, cross-validation, grid search and statistical calibration."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .booster import BoosterConfig, Ensemble, fit, predict
from .data import Dataset, FoldPlan
from .losses import GradHess
from .nulltest import TestConfig, make_r_y, split_test
from .rng import RngStream, derive_seed
from .tree import split_gain

METRIC_MAE = "mae"
METRIC_ROC_AUC = "roc_auc"

# Grids swept by default; the test-mode grid tunes the test itself while
# the penalties grid tunes the classical knobs.
DEFAULT_TEST_GRID = {
    "learning_rate": [0.05, 0.1, 0.3],
    "max_depth": [2, 4, 6],
    "k_draws": [1, 2, 3, 4, 5, 6],
    "rho": [0.0, 0.01, 0.1, 0.5],
}
DEFAULT_PENALTY_GRID = {
    "learning_rate": [0.05, 0.1, 0.3],
    "max_depth": [2, 4, 6],
    "gamma": [0.0, 1.0, 10.0],
    "reg_lambda": [0.0, 1.0, 10.0],
    "n_estimators_cap": [50, 200, 1000],
}

_TEST_PARAMS = {"k_draws", "rho", "max_resample"}
_PENALTY_PARAMS = {"reg_lambda", "alpha_l1", "gamma"}


def mae(y, yhat) -> float:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.size == 0:
        raise ValueError("mae needs two equal-length non-empty vectors")
    return float(np.mean(np.abs(y - yhat)))


def roc_auc(y, scores) -> float:
    """Probability a random positive outscores a random negative, ties 1/2.

    Computed from average ranks (the Mann-Whitney statistic), which equals
    exhaustive pair counting.
    """
    y = np.asarray(y, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if y.shape != scores.shape or y.size == 0:
        raise ValueError("roc_auc needs two equal-length non-empty vectors")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("roc_auc requires 0/1 labels")
    n_pos = int(np.sum(y == 1.0))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc requires both classes present")
    s_sorted = np.sort(scores)
    lo = np.searchsorted(s_sorted, scores, side="left")
    hi = np.searchsorted(s_sorted, scores, side="right")
    ranks = (lo + hi + 1) / 2.0
    rank_sum = float(np.sum(ranks[y == 1.0]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _score(metric: str, y, predictions) -> float:
    if metric == METRIC_MAE:
        return mae(y, predictions)
    if metric == METRIC_ROC_AUC:
        return roc_auc(y, predictions)
    raise ValueError(f"unknown metric {metric!r}")


def metric_is_loss(metric: str) -> bool:
    return metric == METRIC_MAE


@dataclass
class CvResult:
    fold_metrics: list[float]
    mean_metric: float


def _cv_fold_worker(task) -> float:
    dataset, config, folds, i, metric = task
    train = folds.train_rows(i)
    fold = folds.folds[i]
    cfg = config.reseeded(derive_seed(config.seed, i))
    model = fit(dataset.subset(train), cfg)
    preds = predict(model, dataset.subset(fold))
    return _score(metric, dataset.target[fold], preds)


def cross_validate(
    dataset: Dataset,
    config: BoosterConfig,
    folds: FoldPlan,
    metric: str,
    jobs: int = 1,
) -> CvResult:
    """Fit on each fold complement and score on the fold.

    Fold ``i`` runs with seeds derived from ``(config.seed, i)``, so
    results do not depend on fold evaluation order and folds may run in
    parallel (``jobs > 1``).
    """
    tasks = [(dataset, config, folds, i, metric) for i in range(len(folds.folds))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_cv_fold_worker, tasks))
    else:
        scores = [_cv_fold_worker(t) for t in tasks]
    return CvResult(fold_metrics=scores, mean_metric=float(np.mean(scores)))


def apply_grid_params(base: BoosterConfig, params: dict) -> BoosterConfig:
    """Overlay grid parameters onto a base config, routing nested fields."""
    top = {k: v for k, v in params.items() if k not in _TEST_PARAMS | _PENALTY_PARAMS}
    nested = {k: v for k, v in params.items() if k in _TEST_PARAMS | _PENALTY_PARAMS}
    reg = base.regularizer
    if nested:
        wanted = _TEST_PARAMS if isinstance(reg, TestConfig) else _PENALTY_PARAMS
        stray = set(nested) - wanted
        if stray:
            raise ValueError(f"parameters {sorted(stray)} do not apply to {type(reg).__name__}")
        reg = replace(reg, **nested)
    return replace(base, regularizer=reg, **top)


@dataclass
class GridResult:
    metric: str
    combos: list[dict]
    fold_metrics: list[list[float]]
    mean_metrics: list[float]
    best_index: int
    best_config: BoosterConfig
    final_model: Ensemble
    spread: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for i, params in enumerate(self.combos):
            row = {"combo": i, **params}
            row["fold_metrics"] = self.fold_metrics[i]
            row["mean_metric"] = self.mean_metrics[i]
            row["is_best"] = i == self.best_index
            out.append(row)
        return out


def _grid_combo_worker(task) -> CvResult:
    dataset, base_config, params, folds, metric = task
    return cross_validate(dataset, apply_grid_params(base_config, params), folds, metric)


def grid_search(
    dataset: Dataset,
    grid: dict[str, list],
    folds: FoldPlan,
    metric: str,
    base_config: BoosterConfig,
    jobs: int = 1,
) -> GridResult:
    """Exhaustively cross-validate the Cartesian product of a grid.

    Combinations run in declaration order; ties on the mean metric keep
    the earliest combination. The winning config is refit on all rows.
    Combinations are independent and may run in parallel (``jobs > 1``).
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must map parameter names to non-empty value lists")
    names = list(grid.keys())
    combos = [dict(zip(names, values)) for values in itertools.product(*grid.values())]

    tasks = [(dataset, base_config, params, folds, metric) for params in combos]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_grid_combo_worker, tasks))
    else:
        results = [_grid_combo_worker(t) for t in tasks]
    fold_metrics = [r.fold_metrics for r in results]
    mean_metrics = [r.mean_metric for r in results]

    means = np.asarray(mean_metrics)
    best_index = int(np.argmin(means) if metric_is_loss(metric) else np.argmax(means))
    best_config = apply_grid_params(base_config, combos[best_index])
    final_model = fit(dataset, best_config)
    spread = {
        "min": float(means.min()),
        "mean": float(means.mean()),
        "max": float(means.max()),
    }
    return GridResult(
        metric=metric,
        combos=combos,
        fold_metrics=fold_metrics,
        mean_metrics=mean_metrics,
        best_index=best_index,
        best_config=best_config,
        final_model=final_model,
        spread=spread,
    )


def default_grid(mode: str) -> dict[str, list]:
    if mode == "test":
        return {k: list(v) for k, v in DEFAULT_TEST_GRID.items()}
    if mode == "penalties":
        return {k: list(v) for k, v in DEFAULT_PENALTY_GRID.items()}
    raise ValueError(f"unknown grid mode {mode!r}")


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ac = a - a.mean()
    bc = b - b.mean()
    denom = np.sqrt(np.dot(ac, ac) * np.dot(bc, bc))
    if denom == 0.0:
        raise ValueError("correlation undefined for a constant vector")
    return float(np.dot(ac, bc) / denom)


def calibrate_type1(
    n: int,
    k_draws_list,
    rho: float,
    trials: int,
    seed: int,
) -> list[dict]:
    """Measure the empirical pass rate of the test on information-free data.

    Each trial draws a fresh Gaussian target plus an independent noise
    feature, forms the first-step gradients, and scores a root split of
    that feature at a uniformly random threshold, so the candidate gain is
    itself a draw from the null gain distribution (no optimizer selection
    enters). The candidate then faces ``k`` null draws at the given rho.
    Reports per k: the pass rate and the binomial standard error at the
    nominal level ``2**-k``.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if n < 4:
        raise ValueError("need at least 4 rows")
    rows = []
    for k_i, k in enumerate(k_draws_list):
        config = TestConfig(k_draws=int(k), rho=rho, seed=seed)
        passes = 0
        for t in range(trials):
            stream = RngStream(seed).child(k_i, t)
            rng = stream.child(0).generator()
            y = rng.standard_normal(n)
            x = rng.standard_normal(n)
            g = np.mean(y) - y
            h = np.ones(n)
            thresholds = np.unique(x)[1:]
            cut = float(thresholds[rng.integers(thresholds.size)])
            left = x < cut
            candidate = split_gain(
                float(g[left].sum()), float(h[left].sum()),
                float(g[~left].sum()), float(h[~left].sum()),
            )
            passed, _ = split_test(candidate, n, GradHess(g, h), y, config, stream.child(1))
            passes += int(passed)
        alpha = 2.0 ** (-int(k))
        rows.append(
            {
                "k_draws": int(k),
                "alpha": alpha,
                "rho": rho,
                "trials": trials,
                "passes": passes,
                "pass_rate": passes / trials,
                "std_err": float(np.sqrt(alpha * (1.0 - alpha) / trials)),
            }
        )
    return rows


def calibrate_correlation(c: int, rho_list, reps: int, seed: int) -> list[dict]:
    """Empirical correlation of the permuted competitor to its source."""
    if c < 100:
        raise ValueError("need a sample of at least 100")
    rows = []
    for r_i, rho in enumerate(rho_list):
        values = []
        for rep in range(reps):
            rng = RngStream(seed).child(r_i, rep).generator()
            y_c = rng.standard_normal(c)
            r_y = make_r_y(y_c, float(rho), rng)
            values.append(pearson(y_c, r_y))
        values = np.asarray(values)
        rows.append(
            {
                "rho": float(rho),
                "c": c,
                "reps": reps,
                "mean_corr": float(values.mean()),
                "std_corr": float(values.std(ddof=1)) if reps > 1 else 0.0,
            }
        )
    return rows

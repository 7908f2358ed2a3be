"""Metrics, multi-seed orchestration, significance testing, CSV emission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .baselines import BaselineKind, run_dpmf, run_mf, run_pdpmf
from .config import ExperimentConfig
from .data import (
    RatingDataset,
    kfold_splits,
    load_csv,
    load_movielens_100k,
    load_movielens_1m,
    split_leave_n_out,
    split_leave_one_out,
    subsample_per_user,
)
from .exceptions import DivergedRunError
from .model import TrainConfig
from .privacy import allocate_weights
from .protocol import predict_all, run_hdpmf

RESULT_COLUMNS = "method,dataset,K,eps,f_uc,eps_uc,fraction,seed,mse,mae"
AGGREGATE_COLUMNS = "method,dataset,K,eps,f_uc,eps_uc,fraction,n_seeds,mse_mean,mse_std,mae_mean,mae_std"


def mse(predictions, truths) -> float:
    """Mean squared error of paired predictions."""
    predictions = np.asarray(predictions, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if predictions.shape != truths.shape:
        raise ValueError("predictions and truths must have equal length")
    if predictions.size == 0:
        raise ValueError("cannot score an empty prediction list")
    diff = predictions - truths
    return float(np.mean(diff * diff))


def mae(predictions, truths) -> float:
    """Mean absolute error of paired predictions."""
    predictions = np.asarray(predictions, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if predictions.shape != truths.shape:
        raise ValueError("predictions and truths must have equal length")
    if predictions.size == 0:
        raise ValueError("cannot score an empty prediction list")
    return float(np.mean(np.abs(predictions - truths)))


@dataclass
class SeedResult:
    seed: int
    mse: float
    mae: float


@dataclass
class ExperimentResult:
    """Per-seed scores of one method under one configuration."""

    method: BaselineKind
    config: ExperimentConfig
    seed_results: list[SeedResult] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    @property
    def mse_values(self) -> list[float]:
        return [r.mse for r in self.seed_results]

    @property
    def mae_values(self) -> list[float]:
        return [r.mae for r in self.seed_results]

    def _agg(self, values: list[float]) -> tuple[float, float]:
        if not values:
            return math.nan, math.nan
        if len(values) == 1:  # n=1: std reported as 0 by convention
            return values[0], 0.0
        arr = np.asarray(values)
        return float(arr.mean()), float(arr.std(ddof=1))

    @property
    def mse_mean(self) -> float:
        return self._agg(self.mse_values)[0]

    @property
    def mse_std(self) -> float:
        return self._agg(self.mse_values)[1]

    @property
    def mae_mean(self) -> float:
        return self._agg(self.mae_values)[0]

    @property
    def mae_std(self) -> float:
        return self._agg(self.mae_values)[1]


def load_dataset(cfg: ExperimentConfig) -> RatingDataset:
    if cfg.format == "ml-100k":
        return load_movielens_100k(cfg.dataset)
    if cfg.format == "ml-1m":
        return load_movielens_1m(cfg.dataset)
    return load_csv(cfg.dataset, cfg.scale_min, cfg.scale_max)


def train_method(
    method: BaselineKind,
    train_set: RatingDataset,
    weights,
    epsilon: float,
    tc: TrainConfig,
    engine_mode: str = "kernel",
    trace=None,
    loss_log: list[float] | None = None,
):
    """Dispatch to the configured runner; hdpmf and its no-rescale
    ablation train identically."""
    common = dict(engine_mode=engine_mode, trace=trace, loss_log=loss_log)
    if method is BaselineKind.MF:
        return run_mf(train_set, tc, **common)
    if method is BaselineKind.DPMF:
        return run_dpmf(train_set, weights, epsilon, tc, **common)
    if method is BaselineKind.PDPMF:
        return run_pdpmf(train_set, weights, epsilon, tc, **common)
    model, _ = run_hdpmf(train_set, weights, epsilon, tc, **common)
    return model


def run_single_seed(
    cfg: ExperimentConfig,
    dataset: RatingDataset,
    seed: int,
    trace=None,
    loss_log: list[float] | None = None,
) -> SeedResult:
    """Allocate weights, split, train the configured method, score."""
    weights = allocate_weights(cfg.privacy_spec(), dataset.n_users, dataset.n_items, seed)
    if cfg.split == "leave-one-out":
        plan = split_leave_one_out(dataset, seed)
    else:
        plan = split_leave_n_out(dataset, cfg.n_test, seed)
    train_set = subsample_per_user(plan.train, cfg.fraction, seed)
    tc = TrainConfig(
        epochs=cfg.epochs, eta0=cfg.effective_eta0, lam=cfg.lam, K=cfg.k, master_seed=seed
    )
    model = train_method(
        cfg.method, train_set, weights, cfg.epsilon, tc,
        engine_mode=cfg.engine, trace=trace, loss_log=loss_log,
    )
    preds = predict_all(
        model, weights, plan.test.users, plan.test.items,
        dataset.scale_min, dataset.scale_max,
        rescale=cfg.effective_rescale, clamp=cfg.clamp,
    )
    truths = plan.test.ratings
    return SeedResult(seed, mse(preds, truths), mae(preds, truths))


def run_experiment(
    cfg: ExperimentConfig,
    seeds: list[int] | tuple[int, ...] | None = None,
    dataset: RatingDataset | None = None,
    trace=None,
    loss_trace=None,
) -> ExperimentResult:
    """Run every seed and aggregate; diverged seeds become recorded
    failures and the aggregation over the rest is flagged partial.

    `loss_trace` is an optional text handle receiving one
    `seed,epoch,objective` line per training epoch.
    """
    seeds = list(cfg.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    if dataset is None:
        dataset = load_dataset(cfg)
    result = ExperimentResult(method=cfg.method, config=cfg)
    for seed in seeds:
        loss_log: list[float] | None = [] if loss_trace is not None else None
        try:
            result.seed_results.append(
                run_single_seed(cfg, dataset, seed, trace=trace, loss_log=loss_log)
            )
        except DivergedRunError as exc:
            result.failures.append((seed, str(exc)))
        if loss_trace is not None and loss_log:
            for t, value in enumerate(loss_log):
                loss_trace.write(f"{seed},{t},{value!r}\n")
    return result


def grid_search_cv(
    cfg: ExperimentConfig,
    dataset: RatingDataset,
    eta_grid: list[float],
    lam_grid: list[float],
    n_folds: int = 5,
    master_seed: int = 0,
) -> tuple[tuple[float, float], dict[tuple[float, float], float]]:
    """k-fold cross-validated grid search for (eta0, lam).

    Returns the best pair by mean validation MSE and the full score table.
    Optional: the shipped defaults were pinned with this and acceptance
    runs use them directly. Diverged folds score as infinity.
    """
    weights = allocate_weights(cfg.privacy_spec(), dataset.n_users, dataset.n_items, master_seed)
    folds = kfold_splits(dataset, n_folds, master_seed)
    table: dict[tuple[float, float], float] = {}
    for eta0 in eta_grid:
        for lam in lam_grid:
            scores = []
            for fold in folds:
                tc = TrainConfig(
                    epochs=cfg.epochs, eta0=eta0, lam=lam, K=cfg.k, master_seed=master_seed
                )
                try:
                    model = train_method(
                        cfg.method, fold.train, weights, cfg.epsilon, tc,
                        engine_mode=cfg.engine,
                    )
                except DivergedRunError:
                    scores.append(math.inf)
                    continue
                preds = predict_all(
                    model, weights, fold.test.users, fold.test.items,
                    dataset.scale_min, dataset.scale_max,
                    rescale=cfg.effective_rescale, clamp=cfg.clamp,
                )
                scores.append(mse(preds, fold.test.ratings))
            table[(eta0, lam)] = float(np.mean(scores))
    best = min(table, key=lambda key: table[key])
    return best, table


def paired_t_test(a, b) -> tuple[float, str]:
    """One-sided paired t-test that the mean of `a` is below the mean of
    `b`, on per-seed metrics paired by seed.

    Returns (t statistic of the differences b - a, significance in
    {'none', '90%', '95%', '99%'}). Zero-variance differences degenerate
    to t = +/-inf; strict one-sided dominance reports 99% by convention.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length vectors")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = b - a
    sd = float(d.std(ddof=1))
    mean = float(d.mean())
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, "none"
        t = math.inf if mean > 0 else -math.inf
    else:
        t = mean / (sd / math.sqrt(n))
    for level, p in (("99%", 0.99), ("95%", 0.95), ("90%", 0.90)):
        if t > float(stats.t.ppf(p, n - 1)):
            return t, level
    return t, "none"


def _fmt(value: float) -> str:
    return repr(float(value))


def _result_rows(result: ExperimentResult) -> list[str]:
    cfg = result.config
    prefix = (
        f"{result.method.value},{cfg.dataset},{cfg.k},{_fmt(cfg.epsilon)},"
        f"{_fmt(cfg.f_uc)},{_fmt(cfg.eps_uc)},{_fmt(cfg.fraction)}"
    )
    rows = [f"{prefix},{r.seed},{_fmt(r.mse)},{_fmt(r.mae)}" for r in result.seed_results]
    return rows


def _aggregate_row(result: ExperimentResult) -> str:
    cfg = result.config
    return (
        f"{result.method.value},{cfg.dataset},{cfg.k},{_fmt(cfg.epsilon)},"
        f"{_fmt(cfg.f_uc)},{_fmt(cfg.eps_uc)},{_fmt(cfg.fraction)},"
        f"{len(result.seed_results)},{_fmt(result.mse_mean)},{_fmt(result.mse_std)},"
        f"{_fmt(result.mae_mean)},{_fmt(result.mae_std)}"
    )


def emit_results(
    results: list[ExperimentResult],
    path: str | Path,
    provenance: list[str] | None = None,
) -> None:
    """Write per-seed rows plus an aggregate section; deterministic bytes
    for identical inputs, full-precision decimals for exact round-trips."""
    if not results:
        raise ValueError("no results to emit")
    lines = []
    for entry in provenance or []:
        lines.append(f"# {entry}")
    lines.append(RESULT_COLUMNS)
    for result in results:
        lines.extend(_result_rows(result))
    lines.append("# aggregate: mean and sample standard deviation over seeds")
    lines.append(AGGREGATE_COLUMNS)
    for result in results:
        lines.append(_aggregate_row(result))
    failures = [(r.method.value, seed, reason) for r in results for seed, reason in r.failures]
    if failures:
        lines.append("# failures")
        for method, seed, reason in failures:
            lines.append(f"# {method},{seed},{reason}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_results(path: str | Path) -> tuple[list[dict], list[dict]]:
    """Parse a results file back into (seed rows, aggregate rows)."""
    seed_rows: list[dict] = []
    agg_rows: list[dict] = []
    section = "seed"
    seed_fields = RESULT_COLUMNS.split(",")
    agg_fields = AGGREGATE_COLUMNS.split(",")
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            if "aggregate" in line:
                section = "aggregate"
            continue
        if line in (RESULT_COLUMNS, AGGREGATE_COLUMNS):
            continue
        parts = line.split(",")
        if section == "seed":
            row = dict(zip(seed_fields, parts))
            for key in ("K", "seed"):
                row[key] = int(row[key])
            for key in ("eps", "f_uc", "eps_uc", "fraction", "mse", "mae"):
                row[key] = float(row[key])
            seed_rows.append(row)
        else:
            row = dict(zip(agg_fields, parts))
            row["K"] = int(row["K"])
            row["n_seeds"] = int(row["n_seeds"])
            for key in ("eps", "f_uc", "eps_uc", "fraction", "mse_mean", "mse_std", "mae_mean", "mae_std"):
                row[key] = float(row[key])
            agg_rows.append(row)
    return seed_rows, agg_rows

"""Batch training engine: the fast, reference-mode path through the epoch
kernel. The message-level protocol simulation in hdpmf.protocol computes
the same updates entity by entity; this engine is what experiments run.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import kernels
from .data import RatingDataset
from .exceptions import DivergedRunError
from .model import FactorModel, TrainConfig, init_model, learning_rate


def objective_value(
    model: FactorModel,
    dataset: RatingDataset,
    train_vals: np.ndarray,
    noise_totals: np.ndarray,
) -> float:
    """Training objective: squared residuals against the (stretched)
    targets, plus the per-item noise inner products, plus regularization."""
    preds = np.einsum("ik,ik->i", model.U[dataset.users], model.V[dataset.items])
    resid = train_vals - preds
    noise_term = float(np.einsum("jk,jk->", model.V, noise_totals))
    reg = model.lam * (float(np.sum(model.U * model.U)) + float(np.sum(model.V * model.V)))
    return float(resid @ resid) + noise_term + reg


def fit(
    dataset: RatingDataset,
    train_vals: np.ndarray,
    noise_totals: np.ndarray | None,
    cfg: TrainConfig,
    project: bool = True,
    epoch_callback: Callable[[int, FactorModel], None] | None = None,
    loss_log: list[float] | None = None,
) -> FactorModel:
    """Train a factor model on (possibly stretched) target values.

    `train_vals` are the per-entry regression targets in the dataset's
    canonical entry order (raw ratings for plain MF, w_ij * r_ij when
    stretching). `noise_totals` holds the fixed per-item noise vectors, or
    None for the noise-free limit. Updates run sequentially in index order,
    so the result is a pure function of the inputs.

    Raises DivergedRunError naming the first epoch that produced a
    non-finite factor.
    """
    train_vals = np.ascontiguousarray(train_vals, dtype=np.float64)
    if train_vals.shape != (len(dataset),):
        raise ValueError("train_vals must align with dataset entries")
    if noise_totals is None:
        noise_totals = np.zeros((dataset.n_items, cfg.K))
    noise_totals = np.ascontiguousarray(noise_totals, dtype=np.float64)
    if noise_totals.shape != (dataset.n_items, cfg.K):
        raise ValueError(f"noise_totals must have shape ({dataset.n_items}, {cfg.K})")

    model = init_model(dataset.n_users, dataset.n_items, cfg.K, cfg.master_seed, cfg.lam)
    user_ptr, _ = dataset.by_user
    item_ptr, item_order = dataset.by_item
    item_users = np.ascontiguousarray(dataset.users[item_order])
    item_vals = np.ascontiguousarray(train_vals[item_order])

    for t in range(cfg.epochs):
        eta = learning_rate(t, cfg.epochs, cfg.eta0)
        kernels.run_epoch(
            model.U, model.V,
            item_ptr, item_users, item_vals, noise_totals,
            user_ptr, dataset.items, train_vals,
            cfg.lam, eta, project,
        )
        if not (np.isfinite(model.U).all() and np.isfinite(model.V).all()):
            raise DivergedRunError(t)
        if epoch_callback is not None:
            epoch_callback(t, model)
        if loss_log is not None:
            loss_log.append(objective_value(model, dataset, train_vals, noise_totals))
    return model

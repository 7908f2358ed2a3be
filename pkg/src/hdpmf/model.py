"""Latent-factor model: initialization, predictions, gradients, schedule.

The private training objective is

    sum over observed (i, j) of (w_ij * r_ij - u_i . v_j)^2 + v_j . x_j^i
    + lam * (||U||_F^2 + ||V||_F^2)

where x_j^i are fixed noise shares drawn once per run. Item gradients carry
the aggregated noise; user gradients are noise-free because user vectors
never leave the device. User vectors are kept inside the unit L2 ball,
which the calibration of the noise scale relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RatingDataset
from .rng import stream


@dataclass
class FactorModel:
    """User and item latent matrices (one row per entity)."""

    U: np.ndarray  # (n_users, K)
    V: np.ndarray  # (n_items, K)
    K: int
    lam: float = 0.0

    def copy(self) -> "FactorModel":
        return FactorModel(self.U.copy(), self.V.copy(), self.K, self.lam)


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    epochs: int = 100
    eta0: float = 0.005
    lam: float = 0.01
    K: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.eta0 <= 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")


def init_model(n_users: int, n_items: int, K: int, master_seed: int, lam: float = 0.0) -> FactorModel:
    """Fresh model with i.i.d. uniform [0, 1/sqrt(K)] entries.

    The bound makes every initial prediction at most 1 and every initial
    user vector lie inside the unit ball.
    """
    rng = stream(master_seed, "model-init")
    hi = 1.0 / np.sqrt(K)
    U = rng.uniform(0.0, hi, size=(n_users, K))
    V = rng.uniform(0.0, hi, size=(n_items, K))
    return FactorModel(U, V, K, lam)


def predict_raw(model: FactorModel, i: int, j: int) -> float:
    """Inner product u_i . v_j (unscaled prediction)."""
    if not (0 <= i < model.U.shape[0] and 0 <= j < model.V.shape[0]):
        raise IndexError(f"indices ({i}, {j}) out of range")
    return float(model.U[i] @ model.V[j])


def item_gradient(
    model: FactorModel,
    j: int,
    stretched_entries: list[tuple[int, float]],
    noise: np.ndarray,
) -> np.ndarray:
    """Gradient of the private objective w.r.t. v_j.

    `stretched_entries` holds (user index, w_ij * r_ij) for the raters of j;
    `noise` is the aggregated per-item noise vector.
    """
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != (model.K,):
        raise ValueError(f"noise must have shape ({model.K},), got {noise.shape}")
    v_j = model.V[j]
    grad = np.zeros(model.K)
    for i, wr in stretched_entries:
        u_i = model.U[i]
        grad += 2.0 * (u_i @ v_j - wr) * u_i
    return grad + noise + 2.0 * model.lam * v_j


def user_gradient(
    model: FactorModel,
    i: int,
    stretched_entries: list[tuple[int, float]],
) -> np.ndarray:
    """Gradient of the private objective w.r.t. u_i (noise-free)."""
    u_i = model.U[i]
    grad = np.zeros(model.K)
    for j, wr in stretched_entries:
        v_j = model.V[j]
        grad += 2.0 * (u_i @ v_j - wr) * v_j
    return grad + 2.0 * model.lam * u_i


def learning_rate(t: int, epochs: int, eta0: float) -> float:
    """Step size at 0-based epoch t: eta0 for the first quarter of the
    epochs, eta0/5 until three quarters, eta0/25 after."""
    if not 0 <= t < epochs:
        raise ValueError(f"epoch {t} outside [0, {epochs})")
    first = (epochs + 3) // 4  # ceil(epochs / 4)
    second = (3 * epochs + 3) // 4  # ceil(3 * epochs / 4)
    if t < first:
        return eta0
    if t < second:
        return eta0 / 5.0
    return eta0 / 25.0


def project_unit_ball(u: np.ndarray) -> np.ndarray:
    """Project onto the unit L2 ball; identity inside, rescale outside."""
    u = np.asarray(u, dtype=np.float64)
    norm = float(np.sqrt(u @ u))
    if norm <= 1.0:
        return u
    return u / norm


def private_objective(model, dataset: RatingDataset, weights, noise_plan) -> float:
    """Exact value of the private training objective.

    Used by gradient-check oracles and optional convergence logging; the
    training loop itself never needs it.
    """
    U, V = model.U, model.V
    total = 0.0
    for idx in range(len(dataset)):
        i = int(dataset.users[idx])
        j = int(dataset.items[idx])
        w = weights.weight(i, j)
        resid = w * dataset.ratings[idx] - U[i] @ V[j]
        total += resid * resid + float(V[j] @ noise_plan.share(i, j))
    total += model.lam * (float(np.sum(U * U)) + float(np.sum(V * V)))
    return total

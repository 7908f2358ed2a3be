"""Privacy machinery: weight allocation, stretching, noise calibration,
distributed noise composition, and prediction rescaling.

Every rating (i, j) carries a privacy weight w_ij = beta_i * gamma_j in
(0, 1], giving it a personal budget w_ij * eps. Training sees the stretched
value w_ij * r_ij, and the item-side gradients are perturbed once per run
by per-item Laplace noise of scale 2*sqrt(K)*delta/eps, assembled from
per-device shares: a shared exponential vector h_j times per-rater Gaussian
draws whose variances sum to one. Predictions divide by w_ij to undo the
stretch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .data import RatingDataset
from .rng import stream


@dataclass
class PrivacySpec:
    """Group ratios and weight ranges for users and items.

    Conservative and moderate groups draw weights uniformly from
    [w_con, w_mod) and [w_mod, w_lib); the liberal group is fixed at w_lib.
    """

    epsilon: float = 1.0
    f_uc: float = 0.54
    f_um: float = 0.37
    f_ic: float = 0.33
    f_im: float = 0.33
    eps_uc: float = 0.1
    eps_um: float = 0.5
    eps_ul: float = 1.0
    eps_ic: float = 0.1
    eps_im: float = 0.5
    eps_il: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        for name in ("f_uc", "f_um", "f_ic", "f_im"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.f_uc + self.f_um > 1.0 + 1e-12:
            raise ValueError("f_uc + f_um must be <= 1")
        if self.f_ic + self.f_im > 1.0 + 1e-12:
            raise ValueError("f_ic + f_im must be <= 1")
        for lo, mid, hi in ((self.eps_uc, self.eps_um, self.eps_ul),
                            (self.eps_ic, self.eps_im, self.eps_il)):
            if not (0.0 < lo <= mid <= hi <= 1.0):
                raise ValueError(f"weight ranges must satisfy 0 < con <= mod <= lib <= 1, got {(lo, mid, hi)}")


@dataclass
class WeightAssignment:
    """Per-user and per-item privacy weights; w_ij = beta_i * gamma_j."""

    beta: np.ndarray  # (n_users,), values in (0, 1]
    gamma: np.ndarray  # (n_items,), values in (0, 1]

    def weight(self, i: int, j: int) -> float:
        return float(self.beta[i] * self.gamma[j])

    def matrix_entries(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        """Vectorized w for parallel (user, item) index arrays."""
        return self.beta[users] * self.gamma[items]

    @classmethod
    def uniform(cls, n_users: int, n_items: int) -> "WeightAssignment":
        """All weights 1 (no stretching, maximum budget everywhere)."""
        return cls(np.ones(n_users), np.ones(n_items))


def _allocate_group_weights(
    count: int, f_con: float, f_mod: float,
    lo: float, mid: float, hi: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Permute entities, fill the first floor(f_con * count) with draws from
    [lo, mid), the next floor(f_mod * count) from [mid, hi), the rest with
    exactly hi."""
    n_con = int(math.floor(f_con * count))
    n_mod = int(math.floor(f_mod * count))
    perm = rng.permutation(count)
    out = np.full(count, hi, dtype=np.float64)
    out[perm[:n_con]] = rng.uniform(lo, mid, size=n_con)
    out[perm[n_con : n_con + n_mod]] = rng.uniform(mid, hi, size=n_mod)
    return out


def allocate_weights(spec: PrivacySpec, n_users: int, n_items: int, master_seed: int) -> WeightAssignment:
    """Randomly assign users and items to privacy groups and draw weights.

    Deterministic in the master seed; user and item draws come from
    independent streams.
    """
    beta = _allocate_group_weights(
        n_users, spec.f_uc, spec.f_um, spec.eps_uc, spec.eps_um, spec.eps_ul,
        stream(master_seed, "user-weights"),
    )
    gamma = _allocate_group_weights(
        n_items, spec.f_ic, spec.f_im, spec.eps_ic, spec.eps_im, spec.eps_il,
        stream(master_seed, "item-weights"),
    )
    return WeightAssignment(beta, gamma)


def weight(assignment: WeightAssignment, i: int, j: int) -> float:
    """Privacy weight of rating (i, j)."""
    return assignment.weight(i, j)


def personalized_budget(w_ij: float, epsilon: float) -> float:
    """Personal privacy budget of one rating."""
    return w_ij * epsilon


def stretch(r_ij: float, w_ij: float) -> float:
    """Shrink a rating by its privacy weight before training."""
    return w_ij * r_ij


def laplace_scale(K: int, delta: float, epsilon: float) -> float:
    """Noise scale 2*sqrt(K)*delta/epsilon that the item factors need for
    the heterogeneous guarantee."""
    if K < 1 or delta <= 0 or epsilon <= 0:
        raise ValueError("K, delta, epsilon must be positive")
    return 2.0 * math.sqrt(K) * delta / epsilon


def sample_laplace(scale: float, rng: np.random.Generator) -> float:
    """One Laplace(0, scale) draw, deterministic in the stream state."""
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    return float(rng.laplace(0.0, scale))


def rescale_prediction(raw: float, w_ij: float, scale_min: float, scale_max: float, clamp: bool = True) -> float:
    """Undo stretching at prediction time: raw / w_ij, clamped to the
    rating scale (division by small weights can overshoot it)."""
    if w_ij <= 0:
        raise ValueError(f"privacy weight must be > 0, got {w_ij}")
    value = raw / w_ij
    if clamp:
        value = min(max(value, scale_min), scale_max)
    return value


@dataclass
class NoisePlan:
    """Once-per-run objective-perturbation noise, decomposed into shares.

    For every rated item j the recommender draws h_j ~ Exp(1)^K and each
    rater i contributes x_j^i = (2*delta/eps) * sqrt(2K*h_j) * c_j^i with
    c_j^i ~ N(0, 1/|raters(j)|)^K, so the per-item aggregate is Laplace of
    scale 2*sqrt(K)*delta/eps per coordinate. Shares are stored in
    item-major order aligned with the dataset's by-item layout.
    """

    item_ptr: np.ndarray  # (n_items + 1,)
    item_users: np.ndarray  # (nnz,), user per slot
    shares: np.ndarray  # (nnz, K)
    h: np.ndarray  # (n_items, K); rows of unrated items stay zero
    delta: float
    epsilon: float
    K: int
    _index: dict | None = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def zeros(cls, dataset: RatingDataset, K: int) -> "NoisePlan":
        """All-zero shares; the noise-free limit used by plain MF and
        reduction tests."""
        ptr, order = dataset.by_item
        return cls(
            item_ptr=ptr,
            item_users=dataset.users[order],
            shares=np.zeros((len(dataset), K)),
            h=np.zeros((dataset.n_items, K)),
            delta=dataset.delta,
            epsilon=math.inf,
            K=K,
        )

    def has_item(self, j: int) -> bool:
        return self.item_ptr[j] < self.item_ptr[j + 1]

    def item_basis(self, j: int) -> np.ndarray:
        """The shared exponential vector h_j of a rated item."""
        if not self.has_item(j):
            raise KeyError(f"item {j} has no raters, no noise entry")
        return self.h[j]

    def share(self, i: int, j: int) -> np.ndarray:
        """The share x_j^i contributed by user i to item j."""
        if self._index is None:
            index = {}
            for j_ in range(len(self.item_ptr) - 1):
                for p in range(self.item_ptr[j_], self.item_ptr[j_ + 1]):
                    index[(int(self.item_users[p]), j_)] = p
            self._index = index
        return self.shares[self._index[(i, j)]]

    @cached_property
    def item_totals(self) -> np.ndarray:
        """(n_items, K) aggregated noise per item; zero rows where unrated."""
        totals = np.zeros((len(self.item_ptr) - 1, self.K))
        for j in range(len(totals)):
            s, e = self.item_ptr[j], self.item_ptr[j + 1]
            if s < e:
                totals[j] = self.shares[s:e].sum(axis=0)
        return totals


def build_noise_plan(
    dataset: RatingDataset, K: int, delta: float, epsilon: float, master_seed: int
) -> NoisePlan:
    """Draw the run's noise shares, keyed so that neither item nor rater
    iteration order can change any draw.

    h_j uses the stream (seed, j); c_j^i the stream (seed, j, i). Items with
    no raters get no entry.
    """
    if epsilon <= 0 or delta <= 0:
        raise ValueError("epsilon and delta must be > 0")
    ptr, order = dataset.by_item
    users_by_item = dataset.users[order]
    shares = np.zeros((len(dataset), K))
    h = np.zeros((dataset.n_items, K))
    coef = 2.0 * delta / epsilon
    for j in range(dataset.n_items):
        s, e = int(ptr[j]), int(ptr[j + 1])
        if s == e:
            continue
        h[j] = stream(master_seed, "noise-h", j).exponential(1.0, size=K)
        basis = coef * np.sqrt(2.0 * K * h[j])
        sigma = 1.0 / math.sqrt(e - s)
        for p in range(s, e):
            i = int(users_by_item[p])
            c = stream(master_seed, "noise-c", j, i).normal(0.0, sigma, size=K)
            shares[p] = basis * c
    return NoisePlan(
        item_ptr=ptr,
        item_users=users_by_item,
        shares=shares,
        h=h,
        delta=delta,
        epsilon=epsilon,
        K=K,
    )

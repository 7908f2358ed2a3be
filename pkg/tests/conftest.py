"""Shared fixtures: synthetic rating data and the optional ML-100K file."""

from pathlib import Path

import numpy as np
import pytest

from hdpmf.config import default_dataset_path
from hdpmf.data import RatingDataset, load_movielens_100k
from hdpmf.rng import stream


def _make_synthetic(
    n_users: int = 120,
    n_items: int = 150,
    mean_per_user: int = 30,
    master_seed: int = 7,
    latent_dim: int = 4,
    noise_sd: float = 0.8,
) -> RatingDataset:
    """Rating data with MovieLens-like marginals: lognormal item popularity,
    lognormal user activity, low-rank structure plus noise, integer ratings
    on [1, 5]."""
    rng = stream(master_seed, "synthetic")
    pop = rng.lognormal(0.0, 1.2, size=n_items)
    pop /= pop.sum()
    lo = min(20, max(2, mean_per_user // 2))
    counts = np.clip(
        rng.lognormal(np.log(mean_per_user * 0.6), 0.7, size=n_users), lo, n_items
    ).astype(int)
    U_true = rng.normal(0, 1.0 / np.sqrt(latent_dim), size=(n_users, latent_dim))
    V_true = rng.normal(0, 1.0, size=(n_items, latent_dim))
    b_u = rng.normal(0, 0.35, size=n_users)
    b_i = rng.normal(0, 0.45, size=n_items)
    users, items, ratings = [], [], []
    for u in range(n_users):
        c = int(counts[u])
        js = rng.choice(n_items, size=c, replace=False, p=pop)
        score = 3.55 + b_u[u] + b_i[js] + U_true[u] @ V_true[js].T + rng.normal(0, noise_sd, size=c)
        users.extend([u] * c)
        items.extend(js.tolist())
        ratings.extend(np.clip(np.rint(score), 1, 5).tolist())
    return RatingDataset(
        np.array(users), np.array(items), np.array(ratings, dtype=float),
        n_users, n_items, 1.0, 5.0,
    )


@pytest.fixture(scope="session")
def synth_factory():
    return _make_synthetic


@pytest.fixture
def tiny_dataset() -> RatingDataset:
    users = np.array([0, 0, 1, 1, 2, 2, 3, 3, 4, 4])
    items = np.array([0, 1, 1, 2, 2, 3, 0, 3, 1, 2])
    ratings = np.array([5, 3, 4, 2, 1, 5, 4, 3, 2, 4], dtype=float)
    return RatingDataset(users, items, ratings, 5, 4, 1.0, 5.0)


@pytest.fixture(scope="session")
def small_synth(synth_factory) -> RatingDataset:
    return synth_factory()


@pytest.fixture(scope="session")
def order_synth(synth_factory) -> RatingDataset:
    """Large enough for the method-ordering and trend checks."""
    return synth_factory(n_users=400, n_items=500, mean_per_user=50, master_seed=17)


@pytest.fixture(scope="session")
def ml100k() -> RatingDataset:
    path = Path(default_dataset_path())
    if not path.exists():
        pytest.skip(
            f"ML-100K not present at {path}; set HDPMF_DATA_DIR to a directory "
            "containing ml-100k/u.data to run this criterion"
        )
    return load_movielens_100k(path)

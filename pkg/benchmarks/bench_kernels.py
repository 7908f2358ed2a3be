"""Benchmark the compiled epoch kernel against the NumPy fallback.

Times full private-training epochs on MovieLens-100K-scale synthetic data
(the hot loop of every experiment), plus the message-level protocol
simulator on a small instance for context.

Usage: python benchmarks/bench_kernels.py [--epochs 30] [--k 10]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hdpmf import _fallback
from hdpmf.data import RatingDataset
from hdpmf.model import init_model
from hdpmf.privacy import PrivacySpec, allocate_weights, build_noise_plan
from hdpmf.rng import stream

try:
    from hdpmf import _native
except ImportError:
    _native = None


def synthetic(n_users: int, n_items: int, mean_per_user: int, seed: int = 0) -> RatingDataset:
    rng = stream(seed, "synthetic")
    pop = rng.lognormal(0.0, 1.2, size=n_items)
    pop /= pop.sum()
    counts = np.clip(
        rng.lognormal(np.log(mean_per_user * 0.6), 0.7, size=n_users), 20, n_items
    ).astype(int)
    users, items, ratings = [], [], []
    for u in range(n_users):
        js = rng.choice(n_items, size=int(counts[u]), replace=False, p=pop)
        users.extend([u] * len(js))
        items.extend(js.tolist())
        ratings.extend(rng.integers(1, 6, size=len(js)).astype(float).tolist())
    return RatingDataset(
        np.array(users), np.array(items), np.array(ratings), n_users, n_items, 1.0, 5.0
    )


def time_backend(impl, ds: RatingDataset, K: int, epochs: int) -> float:
    model = init_model(ds.n_users, ds.n_items, K, master_seed=0)
    weights = allocate_weights(PrivacySpec(), ds.n_users, ds.n_items, 0)
    vals = weights.matrix_entries(ds.users, ds.items) * ds.ratings
    noise = build_noise_plan(ds, K, ds.delta, 1.0, 0).item_totals
    user_ptr, _ = ds.by_user
    item_ptr, order = ds.by_item
    item_users = np.ascontiguousarray(ds.users[order])
    item_vals = np.ascontiguousarray(vals[order])
    start = time.perf_counter()
    for _ in range(epochs):
        impl.run_epoch(
            model.U, model.V, item_ptr, item_users, item_vals, noise,
            user_ptr, ds.items, vals, 0.01, 0.001, True,
        )
    return time.perf_counter() - start


def time_message_engine(ds: RatingDataset, K: int, epochs: int) -> float:
    from hdpmf.model import TrainConfig
    from hdpmf.protocol import run_hdpmf

    weights = allocate_weights(PrivacySpec(), ds.n_users, ds.n_items, 0)
    cfg = TrainConfig(epochs=epochs, eta0=0.001, lam=0.01, K=K, master_seed=0)
    start = time.perf_counter()
    run_hdpmf(ds, weights, 1.0, cfg, engine_mode="messages")
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--k", type=int, default=10)
    args = parser.parse_args()

    ds = synthetic(943, 1682, 106)
    print(f"dataset: {ds.n_users} users x {ds.n_items} items, {len(ds)} ratings, K={args.k}")
    t_py = time_backend(_fallback, ds, args.k, args.epochs)
    print(f"python kernel: {args.epochs} epochs in {t_py:.2f}s "
          f"({1000 * t_py / args.epochs:.1f} ms/epoch)")
    if _native is not None:
        t_c = time_backend(_native, ds, args.k, args.epochs)
        print(f"native kernel: {args.epochs} epochs in {t_c:.2f}s "
              f"({1000 * t_c / args.epochs:.1f} ms/epoch)")
        print(f"speedup: {t_py / t_c:.1f}x")
    else:
        print("native kernel: not built")

    small = synthetic(120, 150, 30, seed=1)
    t_msg = time_message_engine(small, args.k, 5)
    print(f"message engine (context, {small.n_users}x{small.n_items}, 5 epochs): {t_msg:.2f}s")


if __name__ == "__main__":
    main()

"""Rating data: ingestion, splits, cross-validation folds, subsampling.

A :class:`RatingDataset` stores sparse (user, item, rating) triples with a
declared rating scale. Entries are kept in canonical (user, item) order so
that everything downstream (noise streams, sampling, training) is
deterministic regardless of file order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .rng import stream


@dataclass
class RatingDataset:
    """Sparse user-item ratings with a declared scale.

    Arrays are parallel and sorted by (user, item). Treat instances as
    immutable; derived views are cached.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    n_users: int
    n_items: int
    scale_min: float
    scale_max: float

    def __post_init__(self):
        self.users = np.ascontiguousarray(self.users, dtype=np.int64)
        self.items = np.ascontiguousarray(self.items, dtype=np.int64)
        self.ratings = np.ascontiguousarray(self.ratings, dtype=np.float64)
        if not (len(self.users) == len(self.items) == len(self.ratings)):
            raise ValueError("users, items, ratings must have equal length")
        if self.scale_max <= self.scale_min:
            raise ValueError("rating scale must have positive range")
        if len(self.users):
            if self.users.min() < 0 or self.users.max() >= self.n_users:
                raise ValueError("user index out of range")
            if self.items.min() < 0 or self.items.max() >= self.n_items:
                raise ValueError("item index out of range")
            if self.ratings.min() < self.scale_min or self.ratings.max() > self.scale_max:
                raise ValueError("rating outside declared scale")
        order = np.lexsort((self.items, self.users))
        self.users = self.users[order]
        self.items = self.items[order]
        self.ratings = self.ratings[order]
        if len(self.users) > 1:
            same = (np.diff(self.users) == 0) & (np.diff(self.items) == 0)
            if same.any():
                k = int(np.flatnonzero(same)[0])
                raise ValueError(
                    f"duplicate rating for user {self.users[k]}, item {self.items[k]}"
                )

    def __len__(self) -> int:
        return len(self.ratings)

    @property
    def delta(self) -> float:
        """Sensitivity driver: the declared rating range."""
        return self.scale_max - self.scale_min

    @cached_property
    def by_user(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout over users: (ptr, entry order). Entries are already
        user-sorted, so the order is the identity."""
        counts = np.bincount(self.users, minlength=self.n_users)
        ptr = np.zeros(self.n_users + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, np.arange(len(self.users), dtype=np.int64)

    @cached_property
    def by_item(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout over items: (ptr, entry order). Within an item, the
        stable sort keeps users ascending."""
        order = np.argsort(self.items, kind="stable")
        counts = np.bincount(self.items, minlength=self.n_items)
        ptr = np.zeros(self.n_items + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, order

    def item_raters(self, j: int) -> np.ndarray:
        """Users who rated item j, ascending."""
        ptr, order = self.by_item
        return self.users[order[ptr[j] : ptr[j + 1]]]

    def subset(self, mask: np.ndarray) -> "RatingDataset":
        """New dataset keeping entries where mask is True; dimensions and
        scale are preserved."""
        return RatingDataset(
            self.users[mask],
            self.items[mask],
            self.ratings[mask],
            self.n_users,
            self.n_items,
            self.scale_min,
            self.scale_max,
        )


@dataclass
class SplitPlan:
    """A train/test partition of one dataset."""

    train: RatingDataset
    test: RatingDataset
    description: str = field(default="")


def _dense_remap(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Map raw ids to 0..count-1 by ascending raw id."""
    uniq, dense = np.unique(raw, return_inverse=True)
    return dense.astype(np.int64), len(uniq)


def _load_delimited(
    path: str | Path,
    sep: str,
    min_fields: int,
    scale_min: float,
    scale_max: float,
) -> RatingDataset:
    path = Path(path)
    raw_users, raw_items, ratings = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(sep)
            if len(parts) < min_fields:
                raise ParseError(str(path), line_no, f"expected {min_fields} fields, got {len(parts)}")
            try:
                u = int(parts[0])
                i = int(parts[1])
                r = float(parts[2])
            except ValueError as exc:
                raise ParseError(str(path), line_no, str(exc)) from None
            if not (scale_min <= r <= scale_max):
                raise ParseError(
                    str(path), line_no, f"rating {r} outside scale [{scale_min}, {scale_max}]"
                )
            raw_users.append(u)
            raw_items.append(i)
            ratings.append(r)
    users, n_users = _dense_remap(np.asarray(raw_users, dtype=np.int64))
    items, n_items = _dense_remap(np.asarray(raw_items, dtype=np.int64))
    try:
        return RatingDataset(users, items, np.asarray(ratings), n_users, n_items, scale_min, scale_max)
    except ValueError as exc:
        raise ParseError(str(path), 0, str(exc)) from None


def load_movielens_100k(path: str | Path) -> RatingDataset:
    """Parse the tab-separated `user \\t item \\t rating \\t timestamp` format.

    Raw ids are remapped to dense 0-based indices (ascending raw id); the
    scale is fixed to [1, 5].
    """
    return _load_delimited(path, "\t", 4, 1.0, 5.0)


def load_movielens_1m(path: str | Path) -> RatingDataset:
    """Parse the `user::item::rating::timestamp` format, scale [1, 5]."""
    return _load_delimited(path, "::", 4, 1.0, 5.0)


def load_csv(path: str | Path, scale_min: float, scale_max: float) -> RatingDataset:
    """Parse a `user,item,rating` CSV with header and a declared scale.

    A completely empty file yields a valid empty dataset.
    """
    path = Path(path)
    raw_users, raw_items, ratings = [], [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header and header.replace(" ", "") != "user,item,rating":
            raise ParseError(str(path), 1, f"expected header 'user,item,rating', got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(str(path), line_no, f"expected 3 fields, got {len(parts)}")
            try:
                u = int(parts[0])
                i = int(parts[1])
                r = float(parts[2])
            except ValueError as exc:
                raise ParseError(str(path), line_no, str(exc)) from None
            if not (scale_min <= r <= scale_max):
                raise ParseError(
                    str(path), line_no, f"rating {r} outside scale [{scale_min}, {scale_max}]"
                )
            raw_users.append(u)
            raw_items.append(i)
            ratings.append(r)
    users, n_users = _dense_remap(np.asarray(raw_users, dtype=np.int64))
    items, n_items = _dense_remap(np.asarray(raw_items, dtype=np.int64))
    try:
        return RatingDataset(users, items, np.asarray(ratings), n_users, n_items, scale_min, scale_max)
    except ValueError as exc:
        raise ParseError(str(path), 0, str(exc)) from None


def split_leave_n_out(dataset: RatingDataset, n_test: int, master_seed: int) -> SplitPlan:
    """Hold out n_test seeded-random ratings per user.

    Users with at most n_test ratings contribute everything to train, so
    every test user stays trainable.
    """
    ptr, _ = dataset.by_user
    test_mask = np.zeros(len(dataset), dtype=bool)
    for u in range(dataset.n_users):
        s, e = ptr[u], ptr[u + 1]
        if e - s <= n_test:
            continue
        picks = stream(master_seed, "split", u).permutation(e - s)[:n_test]
        test_mask[s + picks] = True
    return SplitPlan(
        train=dataset.subset(~test_mask),
        test=dataset.subset(test_mask),
        description=f"leave-{n_test}-out",
    )


def split_leave_one_out(dataset: RatingDataset, master_seed: int) -> SplitPlan:
    """Hold out one seeded rating per user with at least two ratings."""
    plan = split_leave_n_out(dataset, 1, master_seed)
    plan.description = "leave-one-out"
    return plan


def kfold_splits(dataset: RatingDataset, k: int, master_seed: int) -> list[SplitPlan]:
    """Seeded partition of entries into k near-equal folds (sizes differ by
    at most 1); fold i serves as validation against the rest."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    perm = stream(master_seed, "kfold").permutation(len(dataset))
    plans = []
    for fold, chunk in enumerate(np.array_split(perm, k)):
        mask = np.zeros(len(dataset), dtype=bool)
        mask[chunk] = True
        plans.append(
            SplitPlan(
                train=dataset.subset(~mask),
                test=dataset.subset(mask),
                description=f"fold {fold + 1}/{k}",
            )
        )
    return plans


def subsample_per_user(dataset: RatingDataset, fraction: float, master_seed: int) -> RatingDataset:
    """Keep ceil(fraction * count) seeded-random ratings per user."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return dataset
    ptr, _ = dataset.by_user
    keep = np.zeros(len(dataset), dtype=bool)
    for u in range(dataset.n_users):
        s, e = ptr[u], ptr[u + 1]
        count = e - s
        if count == 0:
            continue
        n_keep = int(np.ceil(fraction * count))
        picks = stream(master_seed, "subsample", u).permutation(count)[:n_keep]
        keep[s + picks] = True
    return dataset.subset(keep)

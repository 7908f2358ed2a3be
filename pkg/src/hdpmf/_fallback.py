"""Pure-NumPy training kernel; same semantics as the compiled extension.

One epoch is one full-batch sweep in index order: every rated item gets one
aggregated gradient step (raters' contributions plus the item's fixed noise
vector plus regularization), then every user takes its local step and is
projected back onto the unit ball. The loops are per-entity with vectorized
inner reductions, so the fallback stays usable at MovieLens scale.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def run_epoch(
    U: np.ndarray,
    V: np.ndarray,
    item_ptr: np.ndarray,
    item_users: np.ndarray,
    item_vals: np.ndarray,
    item_noise: np.ndarray,
    user_ptr: np.ndarray,
    user_items: np.ndarray,
    user_vals: np.ndarray,
    lam: float,
    eta: float,
    project: bool,
) -> None:
    """Run one epoch in place: item phase (ascending j), then user phase
    (ascending i)."""
    n_items = len(item_ptr) - 1
    n_users = len(user_ptr) - 1

    with np.errstate(over="ignore", invalid="ignore"):
        _sweep(U, V, item_ptr, item_users, item_vals, item_noise,
               user_ptr, user_items, user_vals, lam, eta, project,
               n_items, n_users)


def _sweep(U, V, item_ptr, item_users, item_vals, item_noise,
           user_ptr, user_items, user_vals, lam, eta, project,
           n_items, n_users):
    # diverging runs overflow here; the engine's finiteness check reports
    # them, matching the silent compiled kernel
    for j in range(n_items):
        s, e = item_ptr[j], item_ptr[j + 1]
        if s == e:
            continue  # no raters: no update, no noise
        raters = item_users[s:e]
        Ur = U[raters]
        v_j = V[j]
        resid = Ur @ v_j
        resid -= item_vals[s:e]
        resid *= 2.0
        grad = resid @ Ur
        grad += item_noise[j]
        grad += 2.0 * lam * v_j
        V[j] = v_j - eta * grad

    for i in range(n_users):
        s, e = user_ptr[i], user_ptr[i + 1]
        u_i = U[i]
        if s == e:
            grad = 2.0 * lam * u_i
        else:
            cols = user_items[s:e]
            Vi = V[cols]
            resid = Vi @ u_i
            resid -= user_vals[s:e]
            resid *= 2.0
            grad = resid @ Vi
            grad += 2.0 * lam * u_i
        u_new = u_i - eta * grad
        if project:
            norm = float(np.sqrt(u_new @ u_new))
            if norm > 1.0:
                u_new /= norm
        U[i] = u_new

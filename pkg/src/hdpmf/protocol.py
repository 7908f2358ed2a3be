"""In-process simulation of the decentralized training protocol.

An untrusted recommender holds only the item factors and a per-item rater
registry. Ratings, privacy weights, user vectors, and raw noise shares live
on user devices and never cross the boundary: the only device-to-recommender
traffic is rater registration and per-item gradient messages whose payload
is a single K-vector (residual term plus the device's noise share).

Two interchangeable execution paths exist:

* ``engine="kernel"`` — the batch engine (hdpmf.engine) computing the same
  per-entity updates over CSR arrays. This is the reference mode used by
  experiments.
* ``engine="messages"`` — explicit device/recommender objects exchanging
  GradientMessage values, used for protocol audits, traces, and tests.

Per item and epoch both paths aggregate the same rater contributions in the
same ascending order; they agree to floating-point reduction order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np

from . import engine
from .data import RatingDataset
from .exceptions import DivergedRunError, ProtocolError
from .model import FactorModel, TrainConfig, init_model, learning_rate, project_unit_ball
from .privacy import NoisePlan, WeightAssignment, build_noise_plan


@dataclass
class GradientMessage:
    """One device's contribution to one item update."""

    item_index: int
    sender: int
    payload: np.ndarray  # (K,)


class MessageChannel:
    """Instrumented transport between devices and the recommender.

    Counts every message and, when capture is on, keeps the payloads so a
    test can audit exactly what crossed the boundary.
    """

    def __init__(self, capture: bool = False):
        self.capture = capture
        self.n_registrations = 0
        self.n_gradient_messages = 0
        self.n_broadcasts = 0  # recommender -> devices (V or h distribution)
        self.gradient_log: list[GradientMessage] = []

    def register_rater(self, user: int, item: int) -> None:
        self.n_registrations += 1

    def broadcast(self) -> None:
        self.n_broadcasts += 1

    def deliver_gradient(self, message: GradientMessage) -> GradientMessage:
        self.n_gradient_messages += 1
        if self.capture:
            self.gradient_log.append(
                GradientMessage(message.item_index, message.sender, message.payload.copy())
            )
        return message


@dataclass
class UserDevice:
    """Private per-user state: ratings, weights, latent vector, noise shares."""

    user_index: int
    ratings: dict[int, float]
    weights: dict[int, float]
    u: np.ndarray
    noise_shares: dict[int, np.ndarray] = field(default_factory=dict)

    def emit_gradient(self, j: int, v_j: np.ndarray) -> GradientMessage:
        """Local item-gradient contribution plus this device's noise share."""
        if j not in self.ratings:
            raise ProtocolError(f"device {self.user_index} asked to report on unrated item {j}")
        wr = self.weights[j] * self.ratings[j]
        payload = 2.0 * (float(self.u @ v_j) - wr) * self.u
        share = self.noise_shares.get(j)
        if share is not None:
            payload = payload + share
        return GradientMessage(j, self.user_index, payload)

    def update_user(self, V: np.ndarray, lam: float, eta: float, project: bool = True) -> float:
        """Local gradient step against the shared item factors, then
        projection onto the unit ball. Returns the gradient norm."""
        grad = np.zeros_like(self.u)
        for j in sorted(self.ratings):
            v_j = V[j]
            wr = self.weights[j] * self.ratings[j]
            grad += 2.0 * (float(self.u @ v_j) - wr) * v_j
        grad += 2.0 * lam * self.u
        u_new = self.u - eta * grad
        self.u = project_unit_ball(u_new) if project else u_new
        return float(np.sqrt(grad @ grad))


@dataclass
class RecommenderState:
    """What the untrusted recommender is allowed to hold."""

    V: np.ndarray
    raters: dict[int, np.ndarray]  # item -> ascending user indices (membership only)

    def update_item(self, j: int, messages: list[GradientMessage], lam: float, eta: float) -> np.ndarray:
        """Aggregate one message per registered rater and take the step.
        Returns the aggregated gradient (for traces)."""
        expected = self.raters.get(j)
        if expected is None or len(expected) == 0:
            raise ProtocolError(f"item {j} has no registered raters")
        senders = [m.sender for m in messages]
        if sorted(senders) != list(expected):
            raise ProtocolError(
                f"item {j}: expected one message from each of {len(expected)} raters, "
                f"got senders {sorted(senders)}"
            )
        grad = np.zeros(self.V.shape[1])
        for m in messages:
            if m.item_index != j:
                raise ProtocolError(f"message for item {m.item_index} delivered to item {j}")
            grad += m.payload
        grad += 2.0 * lam * self.V[j]
        self.V[j] = self.V[j] - eta * grad
        return grad


def device_emit_gradient(device: UserDevice, j: int, v_j: np.ndarray) -> GradientMessage:
    """Module-level alias of UserDevice.emit_gradient."""
    return device.emit_gradient(j, v_j)


def recommender_update_item(
    state: RecommenderState, j: int, messages: list[GradientMessage], lam: float, eta: float
) -> np.ndarray:
    """Module-level alias of RecommenderState.update_item."""
    return state.update_item(j, messages, lam, eta)


def device_update_user(device: UserDevice, V: np.ndarray, lam: float, eta: float) -> np.ndarray:
    """Module-level alias of UserDevice.update_user; returns the new u_i."""
    device.update_user(V, lam, eta)
    return device.u


def _build_devices(
    dataset: RatingDataset,
    entry_weights: np.ndarray,
    plan: NoisePlan,
    U0: np.ndarray,
) -> list[UserDevice]:
    devices = [
        UserDevice(i, {}, {}, U0[i].copy()) for i in range(dataset.n_users)
    ]
    for p in range(len(dataset)):
        i = int(dataset.users[p])
        j = int(dataset.items[p])
        devices[i].ratings[j] = float(dataset.ratings[p])
        devices[i].weights[j] = float(entry_weights[p])
    for j in range(dataset.n_items):
        s, e = int(plan.item_ptr[j]), int(plan.item_ptr[j + 1])
        for p in range(s, e):
            devices[int(plan.item_users[p])].noise_shares[j] = plan.shares[p]
    return devices


def _train_messages(
    dataset: RatingDataset,
    entry_weights: np.ndarray,
    plan: NoisePlan,
    cfg: TrainConfig,
    channel: MessageChannel,
    project: bool,
    trace: IO[str] | None,
    loss_log: list[float] | None = None,
) -> FactorModel:
    model = init_model(dataset.n_users, dataset.n_items, cfg.K, cfg.master_seed, cfg.lam)
    devices = _build_devices(dataset, entry_weights, plan, model.U)
    item_ptr, item_order = dataset.by_item
    raters = {}
    for j in range(dataset.n_items):
        s, e = int(item_ptr[j]), int(item_ptr[j + 1])
        if s < e:
            raters[j] = dataset.users[item_order[s:e]]
    recommender = RecommenderState(V=model.V, raters=raters)

    for j, members in raters.items():
        channel.broadcast()  # h_j distribution to the rater set
        for i in members:
            channel.register_rater(int(i), j)

    rated_items = sorted(raters)
    for t in range(cfg.epochs):
        eta = learning_rate(t, cfg.epochs, cfg.eta0)
        for j in rated_items:
            v_ro = recommender.V[j].copy()
            v_ro.flags.writeable = False
            messages = [
                channel.deliver_gradient(devices[int(i)].emit_gradient(j, v_ro))
                for i in raters[j]
            ]
            grad = recommender.update_item(j, messages, cfg.lam, eta)
            if trace is not None:
                norm = float(np.sqrt(grad @ grad))
                trace.write(f"{t},item,{j},{len(messages)},{norm!r}\n")
        channel.broadcast()  # end-of-item-phase V distribution
        V_ro = recommender.V.copy()
        V_ro.flags.writeable = False
        for i in range(dataset.n_users):
            norm = devices[i].update_user(V_ro, cfg.lam, eta, project)
            if trace is not None:
                trace.write(f"{t},user,{i},0,{norm!r}\n")
        finite = np.isfinite(recommender.V).all() and all(
            np.isfinite(d.u).all() for d in devices
        )
        if not finite:
            raise DivergedRunError(t)
        if loss_log is not None:
            snapshot = FactorModel(
                np.vstack([d.u for d in devices]), recommender.V, cfg.K, cfg.lam
            )
            loss_log.append(
                engine.objective_value(
                    snapshot, dataset, entry_weights * dataset.ratings, plan.item_totals
                )
            )

    model.U = np.vstack([d.u for d in devices])
    model.V = recommender.V
    return model


def train(
    dataset: RatingDataset,
    entry_weights: np.ndarray,
    plan: NoisePlan,
    cfg: TrainConfig,
    engine_mode: str = "kernel",
    project: bool = True,
    channel: MessageChannel | None = None,
    trace: IO[str] | None = None,
    loss_log: list[float] | None = None,
) -> FactorModel:
    """Train with per-entry privacy weights and a fixed noise plan.

    `entry_weights` aligns with the dataset's canonical entry order; pass
    ones to disable stretching. All methods funnel through here so they
    share initialization, schedule, and projection.
    """
    entry_weights = np.ascontiguousarray(entry_weights, dtype=np.float64)
    if entry_weights.shape != (len(dataset),):
        raise ValueError("entry_weights must align with dataset entries")
    if engine_mode == "kernel":
        vals = entry_weights * dataset.ratings
        return engine.fit(dataset, vals, plan.item_totals, cfg, project=project, loss_log=loss_log)
    if engine_mode == "messages":
        return _train_messages(
            dataset, entry_weights, plan, cfg,
            channel if channel is not None else MessageChannel(),
            project, trace, loss_log,
        )
    raise ValueError(f"unknown engine {engine_mode!r}")


def run_hdpmf(
    dataset: RatingDataset,
    weights: WeightAssignment,
    epsilon: float,
    cfg: TrainConfig,
    engine_mode: str = "kernel",
    noise_plan: NoisePlan | None = None,
    channel: MessageChannel | None = None,
    trace: IO[str] | None = None,
    loss_log: list[float] | None = None,
) -> tuple[FactorModel, NoisePlan]:
    """Full private training run: stretch ratings by w_ij, perturb item
    gradients with the decomposed noise plan, train for cfg.epochs."""
    if noise_plan is None:
        noise_plan = build_noise_plan(dataset, cfg.K, dataset.delta, epsilon, cfg.master_seed)
    entry_weights = weights.matrix_entries(dataset.users, dataset.items)
    model = train(
        dataset, entry_weights, noise_plan, cfg,
        engine_mode=engine_mode, channel=channel, trace=trace, loss_log=loss_log,
    )
    return model, noise_plan


def predict_all(
    model: FactorModel,
    weights: WeightAssignment,
    users: np.ndarray,
    items: np.ndarray,
    scale_min: float,
    scale_max: float,
    rescale: bool = True,
    clamp: bool = True,
) -> np.ndarray:
    """Device-side predictions for (user, item) pairs.

    With `rescale`, raw inner products are divided by w_ij to undo
    stretching; `rescale=False` gives the ablation variant. Both are
    clamped to the rating scale unless `clamp` is off.
    """
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    raw = np.einsum("ik,ik->i", model.U[users], model.V[items])
    if rescale:
        w = weights.matrix_entries(users, items)
        if np.any(w <= 0):
            raise ValueError("privacy weights must be > 0")
        raw = raw / w
    if clamp:
        raw = np.clip(raw, scale_min, scale_max)
    return raw

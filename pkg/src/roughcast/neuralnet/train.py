"""Training loop: Adam with global-norm gradient clipping, early stopping
on validation MAE, and reduce-on-plateau learning-rate scheduling.

Results depend only on (config, data, seed); two runs with identical
inputs produce identical TrainReport curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DivergenceError
from .model import MlpConfig, MlpModel, loss_and_grads

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

PLATEAU_FACTOR = 0.5
PLATEAU_PATIENCE = 10
LR_FLOOR = 1e-5


def clip_global_norm(grads: list[np.ndarray], max_norm: float):
    """Scale gradients in place so their global L2 norm is <= max_norm.

    Returns (pre_clip_norm, post_clip_norm).
    """
    total = float(np.sqrt(sum(float((g**2).sum()) for g in grads)))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads:
            g *= scale
        return total, total * scale
    return total, total


class AdamOptimizer:
    """Adam with bias correction over a fixed parameter list."""

    def __init__(self, params: list[np.ndarray], beta1: float = ADAM_BETA1,
                 beta2: float = ADAM_BETA2, eps: float = ADAM_EPS):
        self.params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = b1 * m + (1 - b1) * g
            v[...] = b2 * v + (1 - b2) * g**2
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainReport:
    """Per-epoch curves plus the stopping decision."""

    train_loss: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)
    lr_trace: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_mae: float = float("inf")
    max_post_clip_norm: float = 0.0

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_mae": self.val_mae,
            "lr_trace": self.lr_trace,
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
            "best_val_mae": self.best_val_mae,
            "max_post_clip_norm": self.max_post_clip_norm,
        }


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    """Seeded shuffle split into batches; the tail batch is kept, except a
    lone trailing sample is folded into the previous batch (train-mode
    batch norm needs >= 2 rows)."""
    perm = rng.permutation(n)
    bounds = list(range(0, n, batch_size))
    batches = [perm[start : start + batch_size] for start in bounds]
    if len(batches) > 1 and len(batches[-1]) == 1:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def train_mlp(model: MlpModel, X_train, y_train, X_val, y_val,
              config: MlpConfig | None = None, sample_weights=None):
    """Fit the model; return (best_model, TrainReport).

    Optimizes weighted MSE + L2 with Adam and gradient clipping. Early
    stopping tracks validation MAE with the configured patience; the
    plateau scheduler halves the learning rate after PLATEAU_PATIENCE
    stagnant epochs, never below LR_FLOOR. The returned model is the
    snapshot at the best validation MAE.
    """
    config = config or model.config
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    y_train = np.asarray(y_train, dtype=float).ravel()
    X_val = np.atleast_2d(np.asarray(X_val, dtype=float))
    y_val = np.asarray(y_val, dtype=float).ravel()
    if len(X_train) == 0 or len(X_val) == 0:
        raise ConfigError("train and validation sets must be non-empty")
    if sample_weights is None:
        sample_weights = np.ones(len(X_train))
    else:
        sample_weights = np.asarray(sample_weights, dtype=float).ravel()
        if len(sample_weights) != len(X_train):
            raise ConfigError("sample_weights length must match the training set")

    # Warm-start a fresh output bias at the weighted target mean. Adam's
    # per-step displacement is bounded near the learning rate, so an
    # uncentered target would otherwise spend most of a short budget just
    # walking the bias toward the mean. Skipped for zero total weight
    # (nothing to fit) and for a non-zero bias (warm start or hand-set).
    head = model.layers[-1]
    w_total = float(sample_weights.sum())
    if w_total > 0 and np.all(head.b == 0.0):
        head.b[...] = float((sample_weights * y_train).sum() / w_total)

    rng = np.random.default_rng(np.random.SeedSequence([max(config.seed, 0), 1]))
    optimizer = AdamOptimizer(model.parameters())
    report = TrainReport()
    lr = config.learning_rate
    best_snapshot = model.copy()
    stagnant = 0
    plateau_stagnant = 0

    for epoch in range(1, config.max_epochs + 1):
        epoch_loss = 0.0
        epoch_weight = 0.0
        for batch_idx in _batches(len(X_train), config.batch_size, rng):
            loss, _, grads = loss_and_grads(
                model,
                X_train[batch_idx],
                y_train[batch_idx],
                sample_weights=sample_weights[batch_idx],
                mode="train",
                dropout_rng=rng,
                update_running=True,
            )
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            _, post = clip_global_norm(grads, config.grad_clip_norm)
            report.max_post_clip_norm = max(report.max_post_clip_norm, post)
            optimizer.step(grads, lr)
            bw = float(np.sum(sample_weights[batch_idx]))
            epoch_loss += loss * max(bw, 1e-300)
            epoch_weight += max(bw, 1e-300)
        report.train_loss.append(epoch_loss / epoch_weight)

        val_mae = float(np.mean(np.abs(model.predict(X_val) - y_val)))
        if not np.isfinite(val_mae):
            raise DivergenceError(f"non-finite validation MAE at epoch {epoch}", epoch=epoch)
        report.val_mae.append(val_mae)
        report.lr_trace.append(lr)
        report.stopped_epoch = epoch

        if val_mae < report.best_val_mae:
            report.best_val_mae = val_mae
            report.best_epoch = epoch
            best_snapshot = model.copy()
            stagnant = 0
            plateau_stagnant = 0
        else:
            stagnant += 1
            plateau_stagnant += 1
            if plateau_stagnant >= PLATEAU_PATIENCE and lr > LR_FLOOR:
                lr = max(lr * PLATEAU_FACTOR, LR_FLOOR)
                plateau_stagnant = 0
            if stagnant >= config.early_stop_patience:
                break

    best_snapshot.metadata.update(
        epochs_run=report.stopped_epoch,
        best_val_mae=report.best_val_mae,
        best_epoch=report.best_epoch,
    )
    return best_snapshot, report


def gradient_check(model: MlpModel, X, y, sample_weights=None, epsilon: float = 1e-5,
                   max_checked: int = 200, seed: int = 0, mode: str = "eval") -> float:
    """Max relative error between backprop and central finite differences.

    Batch-norm layers are frozen in eval mode by default and dropout is
    disabled, so the checked objective is deterministic. All parameters are
    checked when the model has at most ``max_checked`` of them; otherwise a
    seeded random subset of ``max_checked`` (>= 200 recommended) is used.

    Parameters whose perturbation flips a relu unit's active state between
    the two evaluation points are skipped: the objective has a kink inside
    the interval there and the central difference does not estimate the
    (one-sided) gradient. The skip decision uses only forward passes, so an
    incorrect backward pass can never hide behind it.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()

    def objective():
        loss, _, grads, states = loss_and_grads(
            model, X, y, sample_weights=sample_weights, mode=mode,
            dropout_rng=None, update_running=False, return_relu_states=True,
        )
        return loss, grads, states

    _, grads, _ = objective()
    params = model.parameters()
    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    if total <= max_checked:
        flat_indices = np.arange(total)
    else:
        flat_indices = rng.choice(total, size=max_checked, replace=False)

    offsets = np.cumsum([0] + sizes)
    max_rel = 0.0
    for flat in flat_indices:
        pi = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[pi])
        p = params[pi].ravel()
        orig = p[local]
        p[local] = orig + epsilon
        loss_plus, _, states_plus = objective()
        p[local] = orig - epsilon
        loss_minus, _, states_minus = objective()
        p[local] = orig
        if states_plus != states_minus:
            continue  # kink inside the interval; FD invalid here
        fd = (loss_plus - loss_minus) / (2 * epsilon)
        bp = grads[pi].ravel()[local]
        rel = abs(bp - fd) / max(abs(bp) + abs(fd), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel

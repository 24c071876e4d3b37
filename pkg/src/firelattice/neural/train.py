"""Mini-batch training with Adam on the mean-squared loss."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .layers import mse_loss
from .models import Model
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class TrainResult:
    model: Model
    initial_loss: float
    history: list[float] = field(default_factory=list)  # mean batch loss per epoch
    final_loss: float = float("nan")


def _targets(y: np.ndarray) -> np.ndarray:
    return y[..., None] if y.ndim == 3 else y


def dataset_loss(model: Model, x: np.ndarray, y: np.ndarray, batch_size: int = 16) -> float:
    """Training-mode (unclipped) MSE over the whole set."""
    y = _targets(y)
    total = 0.0
    for s in range(0, len(x), batch_size):
        pred = model.forward(x[s:s + batch_size])[0]
        total += float(np.sum((pred - y[s:s + batch_size]) ** 2))
    return total / y.size


def train(model: Model, x: np.ndarray, y: np.ndarray, epochs: int, lr: float = 1e-4,
          batch_size: int = 8, seed: int = 0, beta1: float = 0.9, beta2: float = 0.999,
          eps: float = 1e-8, progress=None) -> TrainResult:
    """Fit ``model`` in place. Shuffling comes from ``seed`` only, so runs repeat exactly.

    ``x`` is ``(N, T, H, W, C)`` and ``y`` is ``(N, H, W)`` or ``(N, H, W, 1)``.
    """
    if len(x) == 0:
        raise ValueError("empty training set")
    if len(x) != len(y):
        raise ValueError(f"{len(x)} inputs but {len(y)} labels")
    y = _targets(y)
    rng = np.random.default_rng(seed)
    opt = Adam(lr, beta1, beta2, eps)
    result = TrainResult(model=model, initial_loss=dataset_loss(model, x, y, batch_size))
    for epoch in range(epochs):
        order = rng.permutation(len(x))
        total, count = 0.0, 0
        for s in range(0, len(x), batch_size):
            idx = order[s:s + batch_size]
            pred, cache = model.forward(x[idx])
            loss, dy = mse_loss(pred, y[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at epoch {epoch}, batch starting {s}; "
                    f"max |pred| {np.nanmax(np.abs(pred)):.3g}, lr {lr}")
            grads = model.backward(dy, cache)
            opt.step(model.params, grads)
            total += loss * len(idx)
            count += len(idx)
        result.history.append(total / count)
        if progress is not None:
            progress(epoch, result.history[-1])
        log.debug("epoch %d loss %.6g", epoch, result.history[-1])
    result.final_loss = dataset_loss(model, x, y, batch_size)
    if not np.isfinite(result.final_loss):
        raise TrainingDiverged(f"non-finite final loss {result.final_loss}")
    return result

"""Autoregressive multi-step prediction over a pluggable one-step predictor.

The rollout keeps its input window in physical units. Before each call the
window is normalised with the corpus statistics; predictors return the next
front in fuel-consumption units. After each prediction a new frame is
appended: vegetation minus the prediction (clamped at 0), scar plus the
prediction, front set to the prediction and wind set to the schedule at
the new frame's step; the oldest frame is dropped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .dataset import NormStats, denormalize_channel, normalize, window_instances
from .metrics import StepMetrics, evaluate_rollout
from .seqio import write_sequence
from .sequence import FireSequence, WindSchedule

STEPS = 50


class RolloutError(RuntimeError):
    """Predictor produced unusable output; carries the failing step index."""

    def __init__(self, step: int, message: str):
        super().__init__(f"rollout step {step}: {message}")
        self.step = step


class Predictor(Protocol):
    history: int

    def predict(self, window: np.ndarray) -> np.ndarray:
        """Next front (H, W) from a normalised ``(history, H, W, C)`` window."""
        ...


class OraclePredictor:
    """Replays the true fronts; each call advances one step."""

    def __init__(self, seq: FireSequence, t_start: int = 0, history: int = 10):
        self.seq = seq
        self.history = history
        self.next_t = t_start + 1

    def predict(self, window):
        if self.next_t >= len(self.seq):
            raise IndexError(f"oracle asked for frame {self.next_t} of a {len(self.seq)}-frame sequence")
        out = self.seq.front[self.next_t].copy()
        self.next_t += 1
        return out


class ZeroPredictor:
    def __init__(self, history: int = 10):
        self.history = history

    def predict(self, window):
        return np.zeros(window.shape[1:3])


class PersistencePredictor:
    """Repeats the latest front in the window."""

    def __init__(self, stats: NormStats, channels, history: int = 10):
        self.stats = stats
        self.channels = tuple(channels)
        self.history = history
        self._front = self.channels.index("front")

    def predict(self, window):
        return denormalize_channel(window[-1, ..., self._front], self.stats, "front")


def oracle_predictor(seq: FireSequence, t_start: int = 0, history: int = 10) -> OraclePredictor:
    return OraclePredictor(seq, t_start, history)


def zero_predictor(history: int = 10) -> ZeroPredictor:
    return ZeroPredictor(history)


def persistence_predictor(stats: NormStats, channels, history: int = 10) -> PersistencePredictor:
    return PersistencePredictor(stats, channels, history)


@dataclass
class RolloutResult:
    fronts: np.ndarray  # (steps, H, W) predictions
    scars: np.ndarray
    vegetation: np.ndarray
    truth_fronts: np.ndarray
    truth_scars: np.ndarray
    truth_vegetation: np.ndarray
    t_start: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.fronts.shape[0]

    def metrics(self, **kwargs) -> list[StepMetrics]:
        return evaluate_rollout(self.fronts, self.truth_fronts, self.scars, self.truth_scars, **kwargs)

    def to_sequence(self, source: FireSequence) -> FireSequence:
        """Predicted frames as a sequence whose frame 0 is step ``t_start + 1``."""
        offset = self.t_start + 1
        segs = [(max(s - offset, 0), u) for s, u in source.wind.segments]
        kept = {}
        for s, u in segs:
            kept[s] = u  # later segments clipped to 0 override earlier ones
        wind = WindSchedule(tuple(sorted(kept.items())))
        return FireSequence(
            density=source.density, altitude=source.altitude, moisture=source.moisture,
            front=self.fronts, scar=self.scars, fuel=self.vegetation, wind=wind,
            meta={**self.meta, "t_start": self.t_start},
        )

    def write(self, path, source: FireSequence) -> None:
        write_sequence(path, self.to_sequence(source),
                       extra={"predicted": True, "t_start": self.t_start})


def autoregress(pred: Predictor, seq: FireSequence, channels, stats: NormStats,
                t_start: int = 0, steps: int = STEPS) -> RolloutResult:
    channels = tuple(channels)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t_start < 0 or t_start + steps >= len(seq):
        raise ValueError(f"{len(seq)}-frame sequence too short for {steps} steps from t_start={t_start}")
    ci = {c: channels.index(c) for c in ("vegetation", "scar", "front")}
    history = int(getattr(pred, "history", 10))
    window = window_instances(seq, t_start, channels, history).window.copy()
    shape = seq.shape

    fronts, scars, vegs = [], [], []
    for i in range(steps):
        y = np.asarray(pred.predict(normalize(window, stats, channels)), dtype=np.float64)
        if y.shape != shape:
            raise RolloutError(i, f"prediction has shape {y.shape}, expected {shape}")
        if not np.all(np.isfinite(y)):
            raise RolloutError(i, "prediction contains non-finite values")
        last = window[-1]
        new = last.copy()
        new[..., ci["vegetation"]] = np.maximum(last[..., ci["vegetation"]] - y, 0.0)
        new[..., ci["scar"]] = last[..., ci["scar"]] + y
        new[..., ci["front"]] = y
        u = seq.wind.at(t_start + i + 1)
        if "wind_x" in channels:
            new[..., channels.index("wind_x")] = u[0]
        if "wind_y" in channels:
            new[..., channels.index("wind_y")] = u[1]
        window = np.concatenate([window[1:], new[None]], axis=0)
        fronts.append(y)
        scars.append(new[..., ci["scar"]].copy())
        vegs.append(new[..., ci["vegetation"]].copy())

    sl = slice(t_start + 1, t_start + steps + 1)
    return RolloutResult(
        fronts=np.stack(fronts), scars=np.stack(scars), vegetation=np.stack(vegs),
        truth_fronts=seq.front[sl].copy(), truth_scars=seq.scar[sl].copy(),
        truth_vegetation=seq.fuel[sl].copy(), t_start=t_start, meta=dict(seq.meta),
    )

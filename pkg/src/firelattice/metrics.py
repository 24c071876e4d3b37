"""Per-step evaluation metrics for predicted fire fronts and scars."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

JSC_THRESHOLD = 0.1
SA_HORIZON = 10
NEVER = -1
METRICS = ("mse", "ste", "jsc", "sa")
TARGETS = ("front", "scar")


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs truth {truth.shape}")
    return pred, truth


def mse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def ste(pred, truth) -> float:
    """Absolute difference of the field totals; blind to where the fire is."""
    pred, truth = _pair(pred, truth)
    return float(abs(pred.sum() - truth.sum()))


def jsc(pred, truth, threshold: float = JSC_THRESHOLD) -> float:
    """Intersection over union of the cells strictly above ``threshold``.

    Two fire-free fields agree perfectly, so an empty union scores 1.
    """
    pred, truth = _pair(pred, truth)
    a = pred > threshold
    b = truth > threshold
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def arrival_map(fronts, threshold: float = JSC_THRESHOLD) -> np.ndarray:
    """First frame index at which each cell exceeds ``threshold``; -1 if never."""
    fronts = np.asarray(fronts, dtype=np.float64)
    if fronts.ndim != 3 or fronts.shape[0] < 1:
        raise ValueError("need a (T, H, W) stack with at least one frame")
    hot = fronts > threshold
    first = np.argmax(hot, axis=0)
    return np.where(hot.any(axis=0), first, NEVER)


def shape_agreement(pred_fronts, truth_fronts, threshold: float = JSC_THRESHOLD,
                    horizon: int = SA_HORIZON) -> float:
    """Arrival-time agreement: 1 minus the mean saturated timing error.

    Cells burnt in only one of the two series take the full penalty.
    """
    pred_fronts = np.asarray(pred_fronts, dtype=np.float64)
    truth_fronts = np.asarray(truth_fronts, dtype=np.float64)
    if pred_fronts.shape != truth_fronts.shape:
        raise ValueError(f"series mismatch: {pred_fronts.shape} vs {truth_fronts.shape}")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    tp = arrival_map(pred_fronts, threshold)
    tt = arrival_map(truth_fronts, threshold)
    burnt = (tp != NEVER) | (tt != NEVER)
    if not burnt.any():
        return 1.0
    both = (tp != NEVER) & (tt != NEVER)
    penalty = np.where(both, np.minimum(np.abs(tp - tt), horizon) / horizon, 1.0)
    return float(1.0 - penalty[burnt].mean())


@dataclass(frozen=True)
class StepMetrics:
    step: int
    target: str
    mse: float
    ste: float
    jsc: float
    sa: float


def evaluate_rollout(pred_fronts, truth_fronts, pred_scars, truth_scars,
                     threshold: float = JSC_THRESHOLD, horizon: int = SA_HORIZON) -> list[StepMetrics]:
    """Metrics at each rollout step for the front and scar series.

    SA at step ``i`` compares arrival times over steps ``0..i``.
    """
    series = {"front": _pair(pred_fronts, truth_fronts), "scar": _pair(pred_scars, truth_scars)}
    n_steps = series["front"][0].shape[0]
    if series["scar"][0].shape[0] != n_steps:
        raise ValueError("front and scar series have different lengths")
    out = []
    for target in TARGETS:
        p, t = series[target]
        for i in range(n_steps):
            out.append(StepMetrics(
                step=i, target=target, mse=mse(p[i], t[i]), ste=ste(p[i], t[i]),
                jsc=jsc(p[i], t[i], threshold),
                sa=shape_agreement(p[:i + 1], t[:i + 1], threshold, horizon),
            ))
    return out


def metric_table(rows: list[StepMetrics]) -> dict[tuple[str, str], np.ndarray]:
    """``{(target, metric): values by step}``."""
    table = {}
    for target in TARGETS:
        sel = sorted((r for r in rows if r.target == target), key=lambda r: r.step)
        for m in METRICS:
            table[(target, m)] = np.array([getattr(r, m) for r in sel])
    return table


def write_metrics_csv(path, rows: list[StepMetrics]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "target", "metric", "value"])
        for r in sorted(rows, key=lambda r: (TARGETS.index(r.target), r.step)):
            d = asdict(r)
            for m in METRICS:
                w.writerow([r.step, r.target, m, repr(d[m])])

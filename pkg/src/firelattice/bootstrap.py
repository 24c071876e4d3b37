"""Bootstrap confidence bands over test sequences."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_SETS = 20
QUANTILES = (0.05, 0.25, 0.75, 0.95)


def resample(n_sequences: int, n_sets: int = N_SETS, rng: np.random.Generator | None = None) -> np.ndarray:
    """``(n_sets, n_sequences)`` indices drawn uniformly with replacement."""
    if n_sequences < 1:
        raise ValueError("need at least one sequence")
    rng = rng if rng is not None else np.random.default_rng(0)
    return rng.integers(0, n_sequences, size=(n_sets, n_sequences))


def quantile(values, q: float) -> float:
    """Ceiling order statistic: the ``ceil(q * n)``-th smallest value (1-indexed)."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise ValueError("quantile of an empty list")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    # q * n is computed in floating point; round away representation noise first
    pos = math.ceil(round(q * v.size, 9))
    return float(v[min(max(pos, 1), v.size) - 1])


@dataclass
class BootstrapBands:
    """Per (target, metric) arrays indexed by step."""

    point: dict = field(default_factory=dict)
    q05: dict = field(default_factory=dict)
    q25: dict = field(default_factory=dict)
    q75: dict = field(default_factory=dict)
    q95: dict = field(default_factory=dict)

    def keys(self):
        return sorted(self.point)

    def equals(self, other: "BootstrapBands") -> bool:
        if self.keys() != other.keys():
            return False
        return all(np.array_equal(getattr(self, a)[k], getattr(other, a)[k])
                   for a in ("point", "q05", "q25", "q75", "q95") for k in self.keys())


def bands(per_sequence: dict, sets: np.ndarray) -> BootstrapBands:
    """Bands from per-sequence metric curves.

    ``per_sequence[(target, metric)]`` is an ``(S, steps)`` array. Each
    resampled set is reduced to its mean at every step; the point estimate
    is the mean over the unresampled sequences.
    """
    out = BootstrapBands()
    sets = np.asarray(sets)
    for key, curves in per_sequence.items():
        curves = np.asarray(curves, dtype=np.float64)
        if curves.ndim != 2:
            raise ValueError(f"{key}: expected (sequences, steps), got {curves.shape}")
        if sets.size and sets.max() >= curves.shape[0]:
            raise ValueError(f"{key}: resample index beyond {curves.shape[0]} sequences")
        agg = curves[sets].mean(axis=1)  # (n_sets, steps)
        out.point[key] = curves.mean(axis=0)
        for name, q in zip(("q05", "q25", "q75", "q95"), QUANTILES):
            getattr(out, name)[key] = np.array([quantile(agg[:, s], q) for s in range(agg.shape[1])])
    return out


def bands_from_set_curves(set_curves) -> dict[str, np.ndarray]:
    """Quantile bands from already aggregated ``(n_sets, steps)`` curves."""
    c = np.asarray(set_curves, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("expected (n_sets, steps) curves of equal length")
    return {name: np.array([quantile(c[:, s], q) for s in range(c.shape[1])])
            for name, q in zip(("q05", "q25", "q75", "q95"), QUANTILES)}


def write_bands_csv(path, b: BootstrapBands) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "target", "metric", "point", "q05", "q25", "q75", "q95"])
        for target, metric in b.keys():
            key = (target, metric)
            for s in range(len(b.point[key])):
                w.writerow([s, target, metric] + [repr(float(getattr(b, a)[key][s]))
                                                  for a in ("point", "q05", "q25", "q75", "q95")])

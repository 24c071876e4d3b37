"""Dense lattice helpers shared by the simulator, data pipeline and networks.

Fields are plain 2D ``numpy`` float arrays indexed ``[m, n]``: the first
index runs along the field width (x, east), the second along its height
(y, north).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_field(values, name: str = "field") -> np.ndarray:
    """Return ``values`` as a finite 2D float64 array or raise ``ValueError``."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: expected a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


@dataclass(frozen=True)
class SimParams:
    """Analogue model constants.

    Defaults are the values used for every corpus: unit lattice spacing, a
    110x110 field, neighbourhood radius 3, nominal burn duration and
    ignition heat of 3, and sensitivities 1 (moisture), 0.7 (slope) and
    2 (wind). ``dt`` is one simulation step.
    """

    delta: float = 1.0
    n_w: int = 110
    n_h: int = 110
    n_r: int = 3
    d0: float = 3.0
    q0: float = 3.0
    alpha_m: float = 1.0
    alpha_s: float = 0.7
    alpha_w: float = 2.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("delta", "n_w", "n_h", "n_r", "d0", "q0", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SimParams.{name} must be positive")
        for name in ("alpha_m", "alpha_s", "alpha_w"):
            if getattr(self, name) < 0:
                raise ValueError(f"SimParams.{name} must be non-negative")


def zero_pad(field: np.ndarray, border: int) -> np.ndarray:
    if border < 0:
        raise ValueError("border must be >= 0")
    field = np.asarray(field, dtype=np.float64)
    if border == 0:
        return field.copy()
    return np.pad(field, border, mode="constant", constant_values=0.0)


def crop(field: np.ndarray, border: int) -> np.ndarray:
    """Inverse of :func:`zero_pad`."""
    if border < 0:
        raise ValueError("border must be >= 0")
    if border == 0:
        return np.array(field, copy=True)
    return np.array(field[border:-border, border:-border], copy=True)


def terrain_gradient(z: np.ndarray, delta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Altitude gradient ``(sx, sy)`` by central differences.

    Interior cells use ``(Z[m+1] - Z[m-1]) / (2 delta)``; the outermost rows
    and columns fall back to one-sided first differences.
    """
    z = as_field(z, "altitude")
    if z.shape[0] < 3 or z.shape[1] < 3:
        raise ValueError(f"terrain_gradient needs at least 3x3 cells, got {z.shape}")
    sx = np.empty_like(z)
    sy = np.empty_like(z)
    sx[1:-1, :] = (z[2:, :] - z[:-2, :]) / (2.0 * delta)
    sx[0, :] = (z[1, :] - z[0, :]) / delta
    sx[-1, :] = (z[-1, :] - z[-2, :]) / delta
    sy[:, 1:-1] = (z[:, 2:] - z[:, :-2]) / (2.0 * delta)
    sy[:, 0] = (z[:, 1] - z[:, 0]) / delta
    sy[:, -1] = (z[:, -1] - z[:, -2]) / delta
    return sx, sy


def shift(field: np.ndarray, k: int, l: int) -> np.ndarray:
    """``out[i, j] = field[i + k, j + l]``, zero where the source is off-grid."""
    out = np.zeros_like(field)
    m, n = field.shape
    if abs(k) >= m or abs(l) >= n:
        return out
    dst_i = slice(max(0, -k), m - max(0, k))
    dst_j = slice(max(0, -l), n - max(0, l))
    src_i = slice(max(0, k), m - max(0, -k))
    src_j = slice(max(0, l), n - max(0, -l))
    out[dst_i, dst_j] = field[src_i, src_j]
    return out

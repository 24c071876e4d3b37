"""Central-difference gradient checking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

H = 1e-5
RTOL = 1e-4
ATOL = 1e-7


@dataclass
class GradCheck:
    max_rel: float
    max_abs: float
    n_checked: int
    n_failed: int

    @property
    def passed(self) -> bool:
        return self.n_failed == 0


def check(f, arrays: dict, analytic: dict, h: float = H, rtol: float = RTOL, atol: float = ATOL,
          max_entries: int | None = None, rng: np.random.Generator | None = None) -> GradCheck:
    """Compare ``analytic`` gradients of scalar ``f()`` against central differences.

    ``arrays`` are perturbed in place (and restored). An entry passes when its
    absolute error is below ``atol`` or its relative error below ``rtol``;
    ``max_rel`` only counts entries above the absolute floor.
    """
    rng = rng or np.random.default_rng(0)
    max_rel = max_abs = 0.0
    n = failed = 0
    for name, arr in arrays.items():
        idx = np.arange(arr.size)
        if max_entries is not None and arr.size > max_entries:
            idx = rng.choice(arr.size, size=max_entries, replace=False)
        flat = arr.reshape(-1)
        if not np.shares_memory(flat, arr):
            raise ValueError(f"{name} must be contiguous to be perturbed in place")
        a_flat = np.asarray(analytic[name]).reshape(-1)
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            fp = f()
            flat[i] = old - h
            fm = f()
            flat[i] = old
            num = (fp - fm) / (2 * h)
            err = abs(a_flat[i] - num)
            n += 1
            max_abs = max(max_abs, err)
            if err <= atol:
                continue
            rel = err / max(abs(a_flat[i]), abs(num))
            max_rel = max(max_rel, rel)
            if rel >= rtol:
                failed += 1
    return GradCheck(max_rel=max_rel, max_abs=max_abs, n_checked=n, n_failed=failed)

"""Containers shared between the simulator, world generator and dataset code."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class WindSchedule:
    """Piecewise-constant, spatially uniform wind.

    ``segments`` is a tuple of ``(start_step, (ux, uy))``; the first segment
    starts at step 0 and start steps strictly increase.
    """

    segments: tuple[tuple[int, tuple[float, float]], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("WindSchedule needs at least one segment")
        starts = [s for s, _ in self.segments]
        if starts[0] != 0:
            raise ValueError("first wind segment must start at step 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("wind segment start steps must strictly increase")
        object.__setattr__(
            self,
            "segments",
            tuple((int(s), (float(u[0]), float(u[1]))) for s, u in self.segments),
        )

    @classmethod
    def constant(cls, u) -> "WindSchedule":
        return cls(((0, (float(u[0]), float(u[1]))),))

    def at(self, step: float) -> np.ndarray:
        current = self.segments[0][1]
        for start, u in self.segments:
            if start <= step:
                current = u
            else:
                break
        return np.array(current, dtype=np.float64)

    def to_json(self) -> list:
        return [[s, [u[0], u[1]]] for s, u in self.segments]

    @classmethod
    def from_json(cls, data) -> "WindSchedule":
        return cls(tuple((int(s), (float(u[0]), float(u[1]))) for s, u in data))


FRAME_CHANNELS = ("front", "scar", "fuel")
STATIC_CHANNELS = ("density", "altitude", "moisture")


@dataclass
class FireSequence:
    """One simulated fire.

    ``front[t]`` is the fuel consumed by cells burning at step ``t``,
    ``scar[t]`` the cumulative consumption through step ``t`` and
    ``fuel[t]`` what is left afterwards, so ``fuel[t] + scar[t] == density``.
    Arrays are float64 with frame stacks shaped ``(T, N_W, N_H)``.
    """

    density: np.ndarray
    altitude: np.ndarray
    moisture: np.ndarray
    front: np.ndarray
    scar: np.ndarray
    fuel: np.ndarray
    wind: WindSchedule
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        shape = np.shape(self.density)
        for name in STATIC_CHANNELS:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape or arr.ndim != 2:
                raise ValueError(f"static field {name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)
        n_frames = None
        for name in FRAME_CHANNELS:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 3 or arr.shape[1:] != shape:
                raise ValueError(f"frame stack {name} has shape {arr.shape}")
            if n_frames is None:
                n_frames = arr.shape[0]
            elif arr.shape[0] != n_frames:
                raise ValueError("frame stacks disagree on length")
            setattr(self, name, arr)
        if n_frames < 1:
            raise ValueError("a FireSequence needs at least one frame")

    @property
    def shape(self) -> tuple[int, int]:
        return self.density.shape

    def __len__(self) -> int:
        return self.front.shape[0]

    @property
    def burnt_out(self) -> bool:
        return not self.meta.get("truncated", False)

    def frame(self, t: int) -> dict[str, np.ndarray]:
        """Frame ``t``; past the end of a burnt-out fire the scene is quiescent."""
        if t < 0:
            raise IndexError(f"frame index {t} < 0")
        if t < len(self):
            return {"front": self.front[t], "scar": self.scar[t], "fuel": self.fuel[t]}
        if not self.burnt_out:
            raise IndexError(f"frame {t} is past the end of a truncated sequence ({len(self)} frames)")
        return {
            "front": np.zeros(self.shape),
            "scar": self.scar[-1],
            "fuel": self.fuel[-1],
        }

    def extended(self, n_frames: int) -> "FireSequence":
        """Copy padded with quiescent frames up to ``n_frames`` (burnt-out fires only)."""
        if n_frames <= len(self):
            return self
        extra = n_frames - len(self)
        if not self.burnt_out:
            raise ValueError("cannot extend a truncated sequence")
        pad = lambda a, fill: np.concatenate([a, np.repeat(fill[None], extra, axis=0)])
        return FireSequence(
            density=self.density,
            altitude=self.altitude,
            moisture=self.moisture,
            front=pad(self.front, np.zeros(self.shape)),
            scar=pad(self.scar, self.scar[-1]),
            fuel=pad(self.fuel, self.fuel[-1]),
            wind=self.wind,
            meta=dict(self.meta),
        )

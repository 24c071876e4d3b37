"""Procedural scenario generation for the three corpora.

Randomness comes from numpy's PCG64 generator. Each sequence draws from
its own substream seeded by ``SeedSequence([corpus_seed, sequence_index])``
so a corpus is reproducible bit-for-bit on any platform and sequences can
be generated in any order or in parallel.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .analogue import SimState, ignite_spot, initial_state
from .grid import SimParams, zero_pad
from .sequence import WindSchedule

INNER = 100
BORDER = 5

FUEL_FRACTION = 0.5
DENSITY_MEAN = 1.0
DENSITY_STD = 0.25
PATCH_RADIUS = 8
PATCH_COVERAGE = 0.70
PATCH_CLEAR_PROB = 0.40
MOISTURE_STD = 0.25
MAX_GRADE = math.pi / 4
MAX_HEIGHT = 50.0
FIXED_WIND_MAX = 7.0
DYNAMIC_WIND_MAX = 12.0
WIND_CHANGE_STEP = 30
SPOT_RADIUS = 3

FUEL_MODES = ("uniform_sparse", "patchy")
TERRAIN_MODES = ("flat", "planar", "diamond_square")
WIND_MODES = ("fixed", "change_at_30")


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


@dataclass(frozen=True)
class ScenarioSpec:
    fuel_mode: str
    terrain_mode: str
    moisture_enabled: bool
    wind_mode: str
    rng_seed: int = 0

    def __post_init__(self):
        if self.fuel_mode not in FUEL_MODES:
            raise ValueError(f"unknown fuel mode {self.fuel_mode!r}")
        if self.terrain_mode not in TERRAIN_MODES:
            raise ValueError(f"unknown terrain mode {self.terrain_mode!r}")
        if self.wind_mode not in WIND_MODES:
            raise ValueError(f"unknown wind mode {self.wind_mode!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ScenarioSpec":
        return cls(**data)


CORPORA = {
    "wind": ScenarioSpec("uniform_sparse", "flat", False, "fixed"),
    "wind-slope": ScenarioSpec("uniform_sparse", "planar", False, "fixed"),
    "complex": ScenarioSpec("patchy", "diamond_square", True, "change_at_30"),
}


def corpus_spec(name: str, seed: int = 0) -> ScenarioSpec:
    try:
        base = CORPORA[name]
    except KeyError:
        raise ValueError(f"unknown corpus {name!r}; choose from {sorted(CORPORA)}") from None
    return ScenarioSpec(base.fuel_mode, base.terrain_mode, base.moisture_enabled,
                        base.wind_mode, int(seed))


def _densities(rng: np.random.Generator, mask: np.ndarray) -> np.ndarray:
    draws = rng.normal(DENSITY_MEAN, DENSITY_STD, size=mask.shape)
    return np.where(mask, np.maximum(draws, 0.0), 0.0)


def gen_uniform_fuel(rng: np.random.Generator, size: int = INNER) -> np.ndarray:
    """Half the cells (independently) carry Normal(1, 0.25) fuel, clamped at 0."""
    mask = rng.random((size, size)) < FUEL_FRACTION
    return _densities(rng, mask)


def disc_mask(shape, center, radius: float) -> np.ndarray:
    ii, jj = np.ogrid[:shape[0], :shape[1]]
    return (ii - center[0]) ** 2 + (jj - center[1]) ** 2 <= radius * radius


def gen_patchy_fuel(rng: np.random.Generator, size: int = INNER,
                    return_coverage: bool = False):
    """Overlapping radius-8 vegetation discs up to 70% cover, then 40% random clearing."""
    covered = np.zeros((size, size), dtype=bool)
    target = PATCH_COVERAGE * size * size
    while covered.sum() < target:
        center = rng.uniform(0, size, size=2)
        covered |= disc_mask(covered.shape, center, PATCH_RADIUS)
    coverage = int(covered.sum())
    kept = covered & (rng.random(covered.shape) >= PATCH_CLEAR_PROB)
    density = _densities(rng, kept)
    if return_coverage:
        return density, coverage
    return density


def planar_terrain(shape, grade: float, azimuth: float, delta: float = 1.0) -> np.ndarray:
    m = np.arange(shape[0], dtype=np.float64)[:, None]
    n = np.arange(shape[1], dtype=np.float64)[None, :]
    z = math.tan(grade) * (m * math.cos(azimuth) + n * math.sin(azimuth)) * delta
    return z - z.min()


def gen_planar_terrain(rng: np.random.Generator, size: int = INNER + 2 * BORDER,
                       delta: float = 1.0) -> tuple[np.ndarray, float, float]:
    grade = rng.uniform(0.0, MAX_GRADE)
    azimuth = rng.uniform(0.0, 2 * math.pi)
    return planar_terrain((size, size), grade, azimuth, delta), grade, azimuth


def diamond_square(rng: np.random.Generator, levels: int = 7, roughness: float = 1.0,
                   corners=None) -> np.ndarray:
    """Raw diamond-square heightmap on a ``(2**levels + 1)`` square grid.

    Perturbations are Uniform(-amp, amp) with ``amp = roughness`` at the
    first subdivision and halving every level. Midpoints average their
    axis-aligned neighbour pairs (boundary points only the pair along the
    edge), so ``roughness = 0`` yields the bilinear surface through the
    corners.
    """
    n = 2 ** levels
    h = np.zeros((n + 1, n + 1))
    if corners is None:
        corners = rng.random(4)
    h[0, 0], h[0, n], h[n, 0], h[n, n] = corners
    amp = roughness
    step = n
    while step > 1:
        half = step // 2
        # square step: centres of each square
        c = 0.25 * (h[:-1:step, :-1:step] + h[step::step, :-1:step]
                    + h[:-1:step, step::step] + h[step::step, step::step])
        h[half::step, half::step] = c + amp * rng.uniform(-1, 1, size=c.shape)
        # diamond step; rows on the coarse grid first, then the offset rows
        for rows, cols in ((np.arange(0, n + 1, step), np.arange(half, n, step)),
                           (np.arange(half, n, step), np.arange(0, n + 1, step))):
            total = np.zeros((rows.size, cols.size))
            count = np.zeros((rows.size, cols.size))
            ok_r = (rows - half >= 0) & (rows + half <= n)
            ok_c = (cols - half >= 0) & (cols + half <= n)
            r_in, c_in = rows[ok_r], cols[ok_c]
            total[ok_r, :] += h[np.ix_(r_in - half, cols)] + h[np.ix_(r_in + half, cols)]
            count[ok_r, :] += 2
            total[:, ok_c] += h[np.ix_(rows, c_in - half)] + h[np.ix_(rows, c_in + half)]
            count[:, ok_c] += 2
            h[np.ix_(rows, cols)] = total / count + amp * rng.uniform(-1, 1, size=total.shape)
        amp *= 0.5
        step = half
    return h


def gen_diamond_square(rng: np.random.Generator, size: int = INNER + 2 * BORDER,
                       levels: int = 7, max_height: float = MAX_HEIGHT,
                       roughness: float = 1.0) -> np.ndarray:
    """Diamond-square terrain cropped to ``size`` and rescaled to ``[0, max_height]``."""
    if 2 ** levels + 1 < size:
        raise ValueError(f"2**{levels}+1 grid is smaller than the requested {size}")
    z = diamond_square(rng, levels, roughness)[:size, :size]
    lo, hi = z.min(), z.max()
    if hi == lo:
        return np.zeros_like(z)
    return (z - lo) / (hi - lo) * max_height


def gen_moisture(rng: np.random.Generator, size: int = INNER) -> np.ndarray:
    """Folded normal moisture, ``|Normal(0, 0.25)|`` per cell."""
    return np.abs(rng.normal(0.0, MOISTURE_STD, size=(size, size)))


def gen_wind(spec: ScenarioSpec, rng: np.random.Generator) -> WindSchedule:
    if spec.wind_mode == "fixed":
        return WindSchedule.constant(rng.uniform(-FIXED_WIND_MAX, FIXED_WIND_MAX, size=2))
    first = rng.uniform(-DYNAMIC_WIND_MAX, DYNAMIC_WIND_MAX, size=2)
    second = rng.uniform(-DYNAMIC_WIND_MAX, DYNAMIC_WIND_MAX, size=2)
    return WindSchedule(((0, tuple(first)), (WIND_CHANGE_STEP, tuple(second))))


def make_scenario(spec: ScenarioSpec, rng: np.random.Generator,
                  params: SimParams = SimParams(), inner: int = INNER,
                  border: int = BORDER) -> tuple[SimState, WindSchedule, dict]:
    """Build an ignited initial state, its wind schedule and a metadata dict.

    Fuel and moisture live on the ``inner`` square and are zero-padded by
    ``border``; terrain covers the whole padded lattice so its gradient is
    not distorted by the empty ring. The radius-3 spot fire is centred
    uniformly in the middle half of the inner field along each axis.
    """
    size = inner + 2 * border
    info: dict = {}
    if spec.fuel_mode == "uniform_sparse":
        density = gen_uniform_fuel(rng, inner)
    else:
        density = gen_patchy_fuel(rng, inner)
    if spec.terrain_mode == "flat":
        altitude = np.zeros((size, size))
    elif spec.terrain_mode == "planar":
        altitude, grade, azimuth = gen_planar_terrain(rng, size, params.delta)
        info.update(grade=grade, azimuth=azimuth)
    else:
        altitude = gen_diamond_square(rng, size)
    moisture = gen_moisture(rng, inner) if spec.moisture_enabled else np.zeros((inner, inner))
    wind = gen_wind(spec, rng)
    lo, hi = inner // 4, 3 * inner // 4
    center = (int(rng.integers(lo, hi)) + border, int(rng.integers(lo, hi)) + border)
    info["spot_center"] = list(center)

    state = initial_state(zero_pad(density, border), zero_pad(moisture, border), altitude, params)
    state = ignite_spot(state, center, SPOT_RADIUS)
    return state, wind, info

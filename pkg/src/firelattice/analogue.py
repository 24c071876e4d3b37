"""Percolation-style heat accumulation fire spread model.

Every step each burning cell radiates heat to the unburnt cells inside a
circular neighbourhood. The amount received is scaled by a slope factor
(exponential in the grade along the propagation direction) and a wind
factor derived from an elliptical fire front. Cells ignite once their heat
reaches a density- and moisture-dependent threshold and then burn for a
number of steps proportional to their fuel density.

Arrays are indexed ``[m, n]`` with ``m`` pointing east and ``n`` north. A
kernel offset ``(k, l)`` in the receive-form sum names the *source* cell
``(i + k, j + l)``; heat travels along ``-(k, l)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import SimParams, as_field, shift, terrain_gradient
from .sequence import FireSequence, WindSchedule

UNSET = -1.0
WIND_EPS = 1e-9


@dataclass(frozen=True)
class Kernel:
    radius: int
    mask: np.ndarray  # (2r+1, 2r+1) bool, mask[k + r, l + r]
    offsets: tuple[tuple[int, int], ...]

    def flag(self, k: int, l: int) -> int:
        r = self.radius
        if abs(k) > r or abs(l) > r:
            return 0
        return int(self.mask[k + r, l + r])


def build_kernel(n_r: int) -> Kernel:
    """Neighbourhood of all offsets with ``sqrt(k^2 + l^2) <= n_r`` except the centre."""
    if n_r < 1:
        raise ValueError("neighbourhood radius must be >= 1")
    ks = np.arange(-n_r, n_r + 1)
    kk, ll = np.meshgrid(ks, ks, indexing="ij")
    # integer comparison keeps the boundary case k^2 + l^2 == n_r^2 exact
    mask = (kk * kk + ll * ll) <= n_r * n_r
    mask[n_r, n_r] = False
    offsets = tuple((int(k), int(l)) for k, l in zip(kk[mask], ll[mask]))
    mask.setflags(write=False)
    return Kernel(radius=n_r, mask=mask, offsets=offsets)


def slope_factor(s_at, k: int, l: int, alpha_s: float) -> float:
    """``exp(alpha_s * (k, l) . S / |(k, l)|)`` for the direction ``(k, l)``."""
    if k == 0 and l == 0:
        raise ValueError("slope factor undefined for the zero offset")
    return math.exp(alpha_s * (k * s_at[0] + l * s_at[1]) / math.hypot(k, l))


@dataclass(frozen=True)
class WindEllipse:
    zeta: float
    eps: float
    a: float
    b: float
    u: tuple[float, float]

    @property
    def speed(self) -> float:
        return math.hypot(*self.u)


def wind_ellipse(u, dt: float = 1.0) -> WindEllipse:
    speed = math.hypot(float(u[0]), float(u[1]))
    zeta = 1.0 + speed / 4.0
    eps = math.sqrt(max(0.0, 1.0 - zeta ** -2))
    a = speed * dt / (1.0 + eps)
    return WindEllipse(zeta=zeta, eps=eps, a=a, b=a / zeta, u=(float(u[0]), float(u[1])))


def wind_angle(u, k: float, l: float) -> float:
    """Angle between the wind vector and direction ``(k, l)``."""
    speed = math.hypot(u[0], u[1])
    cos_t = (u[0] * k + u[1] * l) / (speed * math.hypot(k, l))
    return math.acos(min(1.0, max(-1.0, cos_t)))


def ellipse_gamma(e: WindEllipse, theta: float) -> float:
    s2 = math.sin(theta) ** 2
    c2 = math.cos(theta) ** 2
    return math.sqrt(e.a ** 2 * s2 - e.a ** 2 * e.eps ** 2 * s2 + e.b ** 2 * c2)


def wind_factor_at_angle(e: WindEllipse, theta: float, alpha_w: float) -> float:
    if e.speed < WIND_EPS:
        return 1.0
    s, c = math.sin(theta), math.cos(theta)
    num = e.a * e.b ** 2 * e.eps * c + e.a * e.b * ellipse_gamma(e, theta)
    den = e.a ** 2 * s * s + e.b ** 2 * c * c
    return 1.0 + alpha_w * num / den


def wind_factor(e: WindEllipse, k: int, l: int, alpha_w: float) -> float:
    """Elliptical wind weighting for spread along direction ``(k, l)``.

    Exactly 1 for (near) calm wind, where the ellipse degenerates.
    """
    if k == 0 and l == 0:
        raise ValueError("wind factor undefined for the zero offset")
    if e.speed < WIND_EPS:
        return 1.0
    return wind_factor_at_angle(e, wind_angle(e.u, k, l), alpha_w)


def ignition_threshold(density, moisture, params: SimParams) -> np.ndarray:
    density = as_field(density, "density")
    moisture = as_field(moisture, "moisture")
    if np.any(density < 0) or np.any(moisture < 0):
        raise ValueError("density and moisture must be non-negative")
    return params.q0 * density + params.alpha_m * moisture


def burn_duration(density, params: SimParams) -> np.ndarray:
    density = as_field(density, "density")
    if np.any(density < 0):
        raise ValueError("density must be non-negative")
    return params.d0 * density


@dataclass
class SimState:
    q: np.ndarray
    burning: np.ndarray
    t_ign: np.ndarray
    fuel: np.ndarray
    scar: np.ndarray
    density: np.ndarray
    moisture: np.ndarray
    altitude: np.ndarray
    q_ign: np.ndarray
    burn_dur: np.ndarray
    clock: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.density.shape

    def copy(self) -> "SimState":
        return SimState(
            **{k: np.array(v, copy=True) for k, v in vars(self).items() if k != "clock"},
            clock=self.clock,
        )


_STATE_FIELDS = ("q", "burning", "t_ign", "fuel", "scar", "density",
                 "moisture", "altitude", "q_ign", "burn_dur")


def initial_state(density, moisture, altitude, params: SimParams = SimParams()) -> SimState:
    """Unburnt state with derived ignition thresholds and burn durations."""
    density = as_field(density, "density")
    moisture = as_field(moisture, "moisture")
    altitude = as_field(altitude, "altitude")
    if not density.shape == moisture.shape == altitude.shape:
        raise ValueError("density, moisture and altitude must share a shape")
    zeros = np.zeros_like(density)
    return SimState(
        q=zeros.copy(),
        burning=zeros.copy(),
        t_ign=np.full_like(density, UNSET),
        fuel=density.copy(),
        scar=zeros.copy(),
        density=density.copy(),
        moisture=moisture.copy(),
        altitude=altitude.copy(),
        q_ign=ignition_threshold(density, moisture, params),
        burn_dur=burn_duration(density, params),
        clock=0.0,
    )


def ignite_spot(state: SimState, center, radius: int) -> SimState:
    """Light every fuelled cell within Euclidean ``radius`` of ``center``."""
    ci, cj = int(center[0]), int(center[1])
    m, n = state.shape
    if not (0 <= ci < m and 0 <= cj < n):
        raise ValueError(f"spot centre {center} outside a {m}x{n} field")
    out = state.copy()
    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    disc = ((ii - ci) ** 2 + (jj - cj) ** 2 <= radius * radius) & (state.density > 0)
    out.burning[disc] = 1.0
    out.q[disc] = state.q_ign[disc]
    out.t_ign[disc] = out.clock
    return out


class Spreader:
    """Per-simulation precomputation of the terrain-dependent kernel weights.

    For each kernel offset the slope factor only depends on the source cell,
    so it is evaluated once per field; the wind factor is spatially uniform
    and cached per wind vector.
    """

    def __init__(self, altitude: np.ndarray, params: SimParams, kernel: Kernel):
        self.params = params
        self.kernel = kernel
        sx, sy = terrain_gradient(altitude, params.delta)
        self.flat = not (np.any(sx) or np.any(sy))
        self.phi = []
        for k, l in kernel.offsets:
            if self.flat:
                self.phi.append(None)
            else:
                # propagation runs from the source toward the receiver: -(k, l)
                r = math.hypot(k, l)
                self.phi.append(np.exp(params.alpha_s * (-k * sx - l * sy) / r))
        self._psi_cache: dict[tuple[float, float], list[float]] = {}

    def psi(self, u) -> list[float]:
        key = (float(u[0]), float(u[1]))
        if key not in self._psi_cache:
            e = wind_ellipse(key, self.params.dt)
            self._psi_cache[key] = [wind_factor(e, -k, -l, self.params.alpha_w)
                                    for k, l in self.kernel.offsets]
        return self._psi_cache[key]

    def heat(self, burning: np.ndarray, u) -> np.ndarray:
        received = np.zeros_like(burning)
        if not burning.any():
            return received
        for (k, l), phi, psi in zip(self.kernel.offsets, self.phi, self.psi(u)):
            emitted = burning if phi is None else phi * burning
            if psi != 1.0:
                emitted = psi * emitted
            received += shift(emitted, k, l)
        return received

    def advance(self, state: SimState, u) -> tuple[SimState, np.ndarray]:
        """One step; also returns the fuel consumed during it."""
        dt = self.params.dt
        q = state.q + self.heat(state.burning, u)

        # cells burning through this step consume density / duration, never below zero
        lit = state.burning > 0
        rate = np.divide(state.density, state.burn_dur,
                         out=np.zeros_like(state.density), where=state.burn_dur > 0)
        consumed = np.where(lit, np.minimum(state.fuel, rate), 0.0)
        fuel = state.fuel - consumed
        scar = state.scar + consumed

        clock = state.clock + dt
        reached = q >= state.q_ign
        newly = (state.t_ign == UNSET) & (state.density > 0) & reached
        t_ign = np.where(newly, clock, state.t_ign)
        burning = reached & (t_ign != UNSET) & ((clock - t_ign) < state.burn_dur)

        nxt = replace(
            state, q=q, burning=burning.astype(np.float64), t_ign=t_ign,
            fuel=fuel, scar=scar, clock=clock,
        )
        return nxt, consumed


def _check_state(state: SimState, kernel: Kernel | None = None) -> None:
    shape = state.density.shape
    for name in _STATE_FIELDS:
        if np.shape(getattr(state, name)) != shape:
            raise ValueError(f"SimState.{name} has shape {np.shape(getattr(state, name))}, expected {shape}")


def step(state: SimState, params: SimParams, kernel: Kernel, u_now) -> SimState:
    """Advance ``state`` by one time step under the spatially uniform wind ``u_now``."""
    _check_state(state)
    nxt, _ = Spreader(state.altitude, params, kernel).advance(state, u_now)
    return nxt


def simulate(initial: SimState, params: SimParams, wind_schedule: WindSchedule,
             max_steps: int = 400, kernel: Kernel | None = None,
             meta: dict | None = None) -> FireSequence:
    """Run until nothing burns or ``max_steps`` steps have been taken.

    Frame ``t`` records the fuel consumed during step ``t`` (front), the
    cumulative scar and the remaining fuel afterwards.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    _check_state(initial)
    kernel = kernel or build_kernel(params.n_r)
    spreader = Spreader(initial.altitude, params, kernel)
    state = initial
    fronts, scars, fuels = [], [], []
    for _ in range(max_steps):
        state, consumed = spreader.advance(state, wind_schedule.at(state.clock))
        fronts.append(consumed)
        scars.append(state.scar)
        fuels.append(state.fuel)
        if not state.burning.any():
            break
    truncated = bool(state.burning.any())
    info = dict(meta or {})
    info.update(burnout_step=len(fronts), truncated=truncated)
    return FireSequence(
        density=initial.density,
        altitude=initial.altitude,
        moisture=initial.moisture,
        front=np.stack(fronts),
        scar=np.stack(scars),
        fuel=np.stack(fuels),
        wind=wind_schedule,
        meta=info,
    )

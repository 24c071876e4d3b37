import math

import numpy as np
import pytest

from firelattice.analogue import (UNSET, Spreader, build_kernel, burn_duration, ignite_spot,
                                  ignition_threshold, initial_state, simulate, slope_factor, step,
                                  wind_ellipse, wind_factor, wind_factor_at_angle)
from firelattice.grid import SimParams, terrain_gradient
from firelattice.sequence import WindSchedule

from conftest import small_fire

P = SimParams()


def naive_psi(u, d, alpha_w, dt=1.0):
    speed = math.hypot(*u)
    if speed < 1e-9:
        return 1.0
    zeta = 1 + speed / 4
    eps = math.sqrt(1 - zeta ** -2)
    a = speed * dt / (1 + eps)
    b = a / zeta
    cos_t = (u[0] * d[0] + u[1] * d[1]) / speed
    theta = math.acos(max(-1.0, min(1.0, cos_t)))
    s, c = math.sin(theta), math.cos(theta)
    gamma = math.sqrt(a * a * s * s - a * a * eps * eps * s * s + b * b * c * c)
    return 1 + alpha_w * (a * b * b * eps * c + a * b * gamma) / (a * a * s * s + b * b * c * c)


def test_kernel_radius3_brute_force():
    ker = build_kernel(3)
    brute = {(k, l) for k in range(-5, 6) for l in range(-5, 6)
             if (k, l) != (0, 0) and math.sqrt(k * k + l * l) <= 3}
    assert set(ker.offsets) == brute
    assert len(ker.offsets) == 28
    assert ker.flag(3, 0) == 1 and ker.flag(2, 2) == 1 and ker.flag(2, 3) == 0 and ker.flag(0, 0) == 0


def test_kernel_radius1_is_von_neumann():
    assert set(build_kernel(1).offsets) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    with pytest.raises(ValueError):
        build_kernel(0)


def test_slope_factor_values():
    assert slope_factor((0.0, 0.0), 1, 2, 0.7) == 1.0
    assert math.isclose(slope_factor((1.0, 0.0), 1, 0, 0.7), math.exp(0.7))
    assert math.isclose(slope_factor((1.0, 0.0), -1, 0, 0.7), math.exp(-0.7))
    with pytest.raises(ValueError):
        slope_factor((1.0, 0.0), 0, 0, 0.7)


def test_wind_ellipse_hand_values():
    e = wind_ellipse((4.0, 0.0))
    assert e.zeta == 2.0
    assert math.isclose(e.eps, math.sqrt(0.75))
    assert math.isclose(e.a, 4 / (1 + math.sqrt(0.75)))
    assert math.isclose(e.b, e.a / 2)


def test_wind_factor_downwind_closed_form():
    for u in [(4.0, 0.0), (0.0, -7.0), (3.0, 4.0)]:
        e = wind_ellipse(u)
        assert math.isclose(wind_factor_at_angle(e, 0.0, 2.0), 1 + 2.0 * math.hypot(*u), rel_tol=1e-12)


def test_wind_factor_matches_naive_formula(rng):
    for _ in range(50):
        u = tuple(rng.uniform(-12, 12, 2))
        k, l = map(int, rng.integers(-3, 4, 2))
        if (k, l) == (0, 0):
            continue
        d = (k / math.hypot(k, l), l / math.hypot(k, l))
        assert math.isclose(wind_factor(wind_ellipse(u), k, l, 2.0), naive_psi(u, d, 2.0), rel_tol=1e-12)


def test_wind_factor_calm_and_ordering():
    assert wind_factor(wind_ellipse((0.0, 0.0)), 1, 0, 2.0) == 1.0
    e = wind_ellipse((5.0, 0.0))
    down, side, up = (wind_factor(e, 1, 0, 2.0), wind_factor(e, 0, 1, 2.0), wind_factor(e, -1, 0, 2.0))
    assert down > side > up >= 1.0
    with pytest.raises(ValueError):
        wind_factor(e, 0, 0, 2.0)


def test_thresholds():
    r = np.array([[1.0, 0.5]])
    m = np.array([[0.2, 0.0]])
    np.testing.assert_allclose(ignition_threshold(r, m, P), [[3.2, 1.5]])
    np.testing.assert_allclose(burn_duration(r, P), [[3.0, 1.5]])
    with pytest.raises(ValueError):
        ignition_threshold(-r, m, P)


def test_heat_matches_naive_receive_sum(rng):
    size = 9
    m, n = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    z = 0.3 * m - 0.2 * n + rng.normal(scale=0.1, size=(size, size))
    burning = (rng.random((size, size)) < 0.3).astype(float)
    u = (3.0, -2.0)
    sp = Spreader(z, P, build_kernel(3))
    got = sp.heat(burning, u)
    sx, sy = terrain_gradient(z)
    ref = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            for k in range(-3, 4):
                for l in range(-3, 4):
                    if (k, l) == (0, 0) or k * k + l * l > 9:
                        continue
                    si, sj = i + k, j + l
                    if not (0 <= si < size and 0 <= sj < size) or not burning[si, sj]:
                        continue
                    r = math.hypot(k, l)
                    d = (-k / r, -l / r)
                    phi = math.exp(0.7 * (d[0] * sx[si, sj] + d[1] * sy[si, sj]))
                    ref[i, j] += phi * naive_psi(u, d, 2.0)
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_two_cell_hand_trace():
    # cell A (density 1) lit alone; neighbour B has density 1/3 so its threshold is 1
    density = np.zeros((7, 7))
    density[3, 3] = 1.0
    density[3, 4] = 1.0 / 3.0
    z = np.zeros_like(density)
    s0 = ignite_spot(initial_state(density, z, z, P), (3, 3), 0)
    assert s0.burning.sum() == 1 and s0.t_ign[3, 3] == 0.0 and s0.q[3, 3] == 3.0
    seq = simulate(s0, P, WindSchedule.constant((0, 0)))
    assert len(seq) == 3 and seq.meta["burnout_step"] == 3 and not seq.meta["truncated"]
    third = 1.0 / 3.0
    assert seq.front[0][3, 3] == pytest.approx(third) and seq.front[0][3, 4] == 0
    assert seq.front[1][3, 3] == pytest.approx(third) and seq.front[1][3, 4] == pytest.approx(third)
    assert seq.front[2][3, 3] == pytest.approx(third) and seq.front[2][3, 4] == 0
    np.testing.assert_allclose(seq.scar[-1], density, atol=1e-12)
    assert seq.front.sum() == pytest.approx(4 / 3)


def test_step_records_ignition_time():
    density = np.zeros((7, 7))
    density[3, 3] = 1.0
    density[3, 4] = 1.0 / 3.0
    z = np.zeros_like(density)
    s = ignite_spot(initial_state(density, z, z, P), (3, 3), 0)
    s1 = step(s, P, build_kernel(3), (0.0, 0.0))
    assert s1.clock == 1.0 and s1.t_ign[3, 4] == 1.0 and s1.burning[3, 4] == 1.0
    assert s1.t_ign[0, 0] == UNSET  # empty cells never ignite


def test_moisture_delays_ignition():
    density = np.zeros((7, 7))
    density[3, 3] = 1.0
    density[3, 4] = 1.0 / 3.0
    z = np.zeros_like(density)
    wet = z.copy()
    wet[3, 4] = 0.5
    s = ignite_spot(initial_state(density, wet, z, P), (3, 3), 0)
    s1 = step(s, P, build_kernel(3), (0.0, 0.0))
    assert s1.burning[3, 4] == 0.0
    s2 = step(s1, P, build_kernel(3), (0.0, 0.0))
    assert s2.burning[3, 4] == 1.0 and s2.t_ign[3, 4] == 2.0


def test_simulation_conservation_and_termination():
    seq = small_fire(seed=3, wind=(2.0, 1.0))
    assert not seq.meta["truncated"]
    np.testing.assert_allclose(seq.fuel + seq.scar, np.broadcast_to(seq.density, seq.fuel.shape), atol=1e-9)
    assert np.all(np.diff(seq.scar, axis=0) >= 0)
    assert np.all(seq.fuel >= 0)
    np.testing.assert_allclose(np.cumsum(seq.front, axis=0), seq.scar, atol=1e-9)


def test_max_steps_truncation():
    seq = small_fire(seed=1, steps=3)
    assert len(seq) == 3 and seq.meta["truncated"]
    with pytest.raises(ValueError):
        small_fire(steps=0)


def test_step_rejects_bad_state():
    density = np.ones((5, 5))
    s = initial_state(density, np.zeros((5, 5)), np.zeros((5, 5)), P)
    s.q = np.zeros((4, 4))
    with pytest.raises(ValueError):
        step(s, P, build_kernel(3), (0.0, 0.0))
    with pytest.raises(ValueError):
        initial_state(density, np.zeros((4, 5)), np.zeros((5, 5)), P)

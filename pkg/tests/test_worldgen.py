import math

import numpy as np
import pytest

from firelattice.grid import terrain_gradient
from firelattice.worldgen import (CORPORA, ScenarioSpec, corpus_spec, diamond_square, disc_mask,
                                  gen_diamond_square, gen_moisture, gen_patchy_fuel, gen_planar_terrain,
                                  gen_uniform_fuel, gen_wind, make_rng, make_scenario, planar_terrain)


def test_substreams_are_reproducible_and_distinct():
    a = make_rng(7, 3).random(5)
    np.testing.assert_array_equal(a, make_rng(7, 3).random(5))
    assert not np.array_equal(a, make_rng(7, 4).random(5))
    assert not np.array_equal(a, make_rng(8, 3).random(5))


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        ScenarioSpec("dense", "flat", False, "fixed")
    s = corpus_spec("complex", 5)
    assert ScenarioSpec.from_json(s.to_json()) == s and s.rng_seed == 5
    with pytest.raises(ValueError):
        corpus_spec("nope")
    assert set(CORPORA) == {"wind", "wind-slope", "complex"}


def test_uniform_fuel_statistics():
    d = gen_uniform_fuel(make_rng(0), 400)
    fueled = d > 0
    assert abs(fueled.mean() - 0.5) < 0.01
    assert abs(d[fueled].mean() - 1.0) < 0.01
    assert abs(d[fueled].std() - 0.25) < 0.01
    assert d.min() >= 0


def test_patchy_fuel_coverage_then_clearing():
    d, coverage = gen_patchy_fuel(make_rng(2), 100, return_coverage=True)
    assert coverage >= 7000
    kept = (d > 0).sum()
    assert abs(kept / coverage - 0.6) < 0.03


def test_patchy_fuel_overall_fraction():
    # about 70% cover with 40% of it cleared leaves roughly 0.42 fuelled
    frac = np.mean([(gen_patchy_fuel(make_rng(i), 100) > 0).mean() for i in range(10)])
    assert abs(frac - 0.42) < 0.03


def test_disc_mask():
    m = disc_mask((9, 9), (4, 4), 2)
    assert m.sum() == 13 and m[4, 6] and not m[6, 6]


def test_planar_terrain_gradient():
    z = planar_terrain((20, 20), math.pi / 6, math.pi / 3)
    sx, sy = terrain_gradient(z)
    g = math.tan(math.pi / 6)
    np.testing.assert_allclose(sx, g * math.cos(math.pi / 3), atol=1e-12)
    np.testing.assert_allclose(sy, g * math.sin(math.pi / 3), atol=1e-12)
    assert z.min() == 0
    z, grade, az = gen_planar_terrain(make_rng(1), 110)
    assert z.shape == (110, 110) and 0 <= grade <= math.pi / 4 and 0 <= az < 2 * math.pi


def test_diamond_square_flat_roughness_is_bilinear():
    corners = [0.0, 1.0, 2.0, 5.0]
    h = diamond_square(make_rng(0), levels=4, roughness=0.0, corners=corners)
    s = np.linspace(0, 1, 17)
    u, v = np.meshgrid(s, s, indexing="ij")
    bil = (1 - u) * (1 - v) * 0 + (1 - u) * v * 1 + u * (1 - v) * 2 + u * v * 5
    np.testing.assert_allclose(h, bil, atol=1e-12)


def test_diamond_square_range_and_determinism():
    z = gen_diamond_square(make_rng(3), 110)
    assert z.shape == (110, 110) and z.min() == 0.0 and z.max() == 50.0
    np.testing.assert_array_equal(z, gen_diamond_square(make_rng(3), 110))
    with pytest.raises(ValueError):
        gen_diamond_square(make_rng(3), 200, levels=7)


def test_moisture_folded_normal():
    m = gen_moisture(make_rng(4), 300)
    assert m.min() >= 0
    assert abs(m.mean() - 0.25 * math.sqrt(2 / math.pi)) < 0.005


def test_wind_modes():
    r = make_rng(5)
    fixed = gen_wind(corpus_spec("wind"), r)
    assert len(fixed.segments) == 1 and np.all(np.abs(fixed.at(0)) <= 7)
    dyn = gen_wind(corpus_spec("complex"), r)
    assert [s for s, _ in dyn.segments] == [0, 30]
    assert np.all(np.abs(dyn.at(0)) <= 12) and np.all(np.abs(dyn.at(30)) <= 12)
    np.testing.assert_array_equal(dyn.at(29), dyn.at(0))


@pytest.mark.parametrize("name", ["wind", "wind-slope", "complex"])
def test_scenario_layout(name):
    state, wind, info = make_scenario(corpus_spec(name, 1), make_rng(1, 0))
    assert state.shape == (110, 110)
    ring = np.ones((110, 110), bool)
    ring[5:-5, 5:-5] = False
    assert not state.density[ring].any() and not state.moisture[ring].any()
    ci, cj = info["spot_center"]
    assert 30 <= ci < 80 and 30 <= cj < 80
    lit = state.burning > 0
    disc = disc_mask(state.shape, (ci, cj), 3)
    np.testing.assert_array_equal(lit, disc & (state.density > 0))
    if name == "wind":
        assert not state.altitude.any() and not state.moisture.any()
    if name == "complex":
        assert state.moisture[5:-5, 5:-5].any() and state.altitude.max() == 50.0

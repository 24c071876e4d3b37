import numpy as np
import pytest

from firelattice.bootstrap import (bands, bands_from_set_curves, quantile, resample,
                                   write_bands_csv)


def test_resample_shapes_and_determinism():
    s = resample(200, rng=np.random.default_rng(3))
    assert s.shape == (20, 200) and s.min() >= 0 and s.max() < 200
    np.testing.assert_array_equal(s, resample(200, rng=np.random.default_rng(3)))
    assert not np.array_equal(s, resample(200, rng=np.random.default_rng(4)))
    np.testing.assert_array_equal(resample(1, rng=np.random.default_rng(0)), np.zeros((20, 1)))
    with pytest.raises(ValueError):
        resample(0)


def test_quantile_order_statistics():
    v = np.arange(20, 0, -1.0)  # 20..1
    assert quantile(v, 0.95) == 19.0
    assert quantile(v, 0.25) == 5.0
    assert quantile(v, 0.05) == 1.0
    assert quantile(v, 0.75) == 15.0
    assert quantile([3.0] * 7, 0.3) == 3.0
    with pytest.raises(ValueError):
        quantile([], 0.5)
    with pytest.raises(ValueError):
        quantile([1.0], 1.0)


def test_hand_fixture():
    vals = np.array([0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 1.0,
                     0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 0.05])
    b = bands_from_set_curves(vals[:, None])
    srt = np.sort(vals)
    assert b["q05"][0] == srt[0] and b["q25"][0] == srt[4] and b["q75"][0] == srt[14] and b["q95"][0] == srt[18]


def test_identical_curves_zero_width():
    curves = {("scar", "jsc"): np.tile(np.linspace(1, 0.5, 7), (12, 1))}
    b = bands(curves, resample(12, rng=np.random.default_rng(0)))
    k = ("scar", "jsc")
    np.testing.assert_allclose(b.q05[k], b.q95[k])
    np.testing.assert_allclose(b.point[k], np.linspace(1, 0.5, 7))


def test_band_ordering_and_set_order_invariance(rng):
    curves = {("front", "mse"): rng.random((30, 9)), ("scar", "sa"): rng.random((30, 9))}
    sets = resample(30, rng=np.random.default_rng(1))
    b = bands(curves, sets)
    for k in curves:
        assert np.all(b.q05[k] <= b.q25[k]) and np.all(b.q25[k] <= b.q75[k]) and np.all(b.q75[k] <= b.q95[k])
    assert b.equals(bands(curves, sets[::-1]))
    with pytest.raises(ValueError):
        bands({("a", "b"): np.zeros(3)}, sets)


def test_csv(tmp_path, rng):
    curves = {("front", "jsc"): rng.random((5, 4))}
    b = bands(curves, resample(5, rng=np.random.default_rng(0)))
    write_bands_csv(tmp_path / "b.csv", b)
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "step,target,metric,point,q05,q25,q75,q95" and len(lines) == 5

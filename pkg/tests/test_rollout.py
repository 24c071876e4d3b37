import numpy as np
import pytest

from firelattice.dataset import CHANNELS, NormStats, compute_norm_stats
from firelattice.rollout import (RolloutError, autoregress, oracle_predictor, persistence_predictor,
                                 zero_predictor)
from firelattice.seqio import read_sequence_with_header
from firelattice.sequence import FireSequence, WindSchedule

from conftest import small_fire

CH = CHANNELS["wind"]


@pytest.fixture(scope="module")
def fire():
    seq = small_fire(size=30, seed=2, wind=(3.0, -1.0))
    return seq.extended(60)


@pytest.fixture(scope="module")
def stats(fire):
    return compute_norm_stats([fire], CH)


def test_oracle_reproduces_truth(fire, stats):
    r = autoregress(oracle_predictor(fire), fire, CH, stats, steps=50)
    assert r.fronts.shape == (50, 30, 30)
    for a, b in ((r.fronts, r.truth_fronts), (r.scars, r.truth_scars), (r.vegetation, r.truth_vegetation)):
        assert a.tobytes() == b.tobytes()
    np.testing.assert_array_equal(r.truth_fronts[0], fire.front[1])
    assert all(m.jsc == 1.0 and m.sa == 1.0 and m.mse == 0 and m.ste == 0 for m in r.metrics())


def test_oracle_from_later_start(fire, stats):
    r = autoregress(oracle_predictor(fire, t_start=5), fire, CH, stats, t_start=5, steps=10)
    np.testing.assert_array_equal(r.fronts[0], fire.front[6])
    np.testing.assert_array_equal(r.scars, fire.scar[6:16])


def test_oracle_past_end(fire):
    o = oracle_predictor(fire, t_start=len(fire) - 1)
    with pytest.raises(IndexError):
        o.predict(None)


def test_zero_predictor_freezes_state(fire, stats):
    r = autoregress(zero_predictor(), fire, CH, stats, t_start=3, steps=20)
    for i in range(20):
        np.testing.assert_array_equal(r.scars[i], fire.scar[3])
        np.testing.assert_array_equal(r.vegetation[i], fire.fuel[3])
    ste = [m.ste for m in r.metrics() if m.target == "front"]
    np.testing.assert_allclose(ste, fire.front[4:24].sum(axis=(1, 2)))


def _hand_fixture():
    shape = (5, 5)
    density = np.ones(shape)
    density[2, 2] = 1.2
    front = np.zeros((5,) + shape)
    front[0, 2, 2] = 0.5
    scar = np.cumsum(front, axis=0)
    fuel = density - scar
    return FireSequence(density, np.zeros(shape), np.zeros(shape), front, scar, fuel,
                        WindSchedule(((0, (1.0, 0.0)), (2, (0.0, 2.0)))))


def test_persistence_by_hand():
    seq = _hand_fixture()
    stats = NormStats(CH, {"vegetation": 0.0, "scar": 0.0, "front": 0.0},
                      {"vegetation": 1.2, "scar": 0.5, "front": 0.5},
                      {"wind_x": 0.0, "wind_y": 0.0}, {"wind_x": 1.0, "wind_y": 1.0})
    r = autoregress(persistence_predictor(stats, CH), seq, CH, stats, steps=3)
    assert [r.fronts[i][2, 2] for i in range(3)] == [0.5, 0.5, 0.5]
    assert [r.scars[i][2, 2] for i in range(3)] == [1.0, 1.5, 2.0]
    assert r.vegetation[0][2, 2] == pytest.approx(0.2)
    assert [r.vegetation[i][2, 2] for i in (1, 2)] == [0.0, 0.0]
    assert (r.vegetation >= 0).all()
    np.testing.assert_array_equal(r.vegetation[:, 0, 0], 1.0)


class Recorder:
    def __init__(self, history, value=0.0):
        self.history, self.value, self.windows = history, value, []

    def predict(self, window):
        self.windows.append(window.copy())
        return np.full(window.shape[1:3], self.value)


def test_window_bookkeeping():
    seq = _hand_fixture()
    stats = NormStats(CH, {c: 0.0 for c in ("vegetation", "scar", "front")},
                      {c: 1.0 for c in ("vegetation", "scar", "front")},
                      {"wind_x": 0.0, "wind_y": 0.0}, {"wind_x": 1.0, "wind_y": 1.0})
    rec = Recorder(history=10, value=0.25)
    r = autoregress(rec, seq, CH, stats, steps=3)
    assert all(w.shape == (10, 5, 5, 5) for w in rec.windows)
    # wind planes follow the schedule at each appended frame's step
    assert rec.windows[1][-1, 0, 0, 3] == 1.0 and rec.windows[2][-1, 0, 0, 4] == 2.0
    np.testing.assert_array_equal(rec.windows[1][-1, ..., 2], 0.25)
    np.testing.assert_array_equal(rec.windows[1][:-1], rec.windows[0][1:])
    np.testing.assert_allclose(r.scars[-1] - seq.scar[0], 0.75, atol=1e-12)



def test_overshooting_predictor_clamps_vegetation_not_scar(stats):
    seq = _hand_fixture()
    r = autoregress(Recorder(history=10, value=0.8), seq, CH, stats, steps=3)
    assert r.vegetation.min() == 0.0
    np.testing.assert_allclose(r.scars[-1], seq.scar[0] + 2.4, atol=1e-12)
    assert np.all(r.scars[-1] > seq.density)

def test_single_frame_window_for_cnn():
    seq = _hand_fixture()
    rec = Recorder(history=1)
    stats = compute_norm_stats([seq], CH)
    autoregress(rec, seq, CH, stats, steps=2)
    assert all(w.shape[0] == 1 for w in rec.windows)


class Bad:
    history = 10

    def __init__(self, fail_at, kind):
        self.n, self.fail_at, self.kind = 0, fail_at, kind

    def predict(self, window):
        self.n += 1
        if self.n - 1 == self.fail_at:
            return np.zeros((2, 2)) if self.kind == "shape" else np.full(window.shape[1:3], np.nan)
        return np.zeros(window.shape[1:3])


@pytest.mark.parametrize("kind", ["shape", "nan"])
def test_bad_predictions_abort_with_step(kind, fire, stats):
    with pytest.raises(RolloutError) as err:
        autoregress(Bad(4, kind), fire, CH, stats, steps=10)
    assert err.value.step == 4 and "step 4" in str(err.value)


def test_too_short(stats):
    seq = _hand_fixture()
    with pytest.raises(ValueError):
        autoregress(zero_predictor(), seq, CH, stats, steps=5)


def test_result_serialises_with_flag(tmp_path, fire, stats):
    r = autoregress(zero_predictor(), fire, CH, stats, t_start=31, steps=5)
    r.write(tmp_path / "p.embrseq", fire)
    back, header = read_sequence_with_header(tmp_path / "p.embrseq")
    assert header["predicted"] is True and header["t_start"] == 31 and len(back) == 5
    np.testing.assert_array_equal(back.scar, r.scars)

import numpy as np
import pytest

from firelattice.analogue import build_kernel, ignite_spot, initial_state, simulate
from firelattice.grid import SimParams
from firelattice.sequence import FireSequence, WindSchedule

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0][1:])):
            terminalreporter.write_line(line)


def small_fire(size=24, seed=0, wind=(0.0, 0.0), density=None, steps=400, params=SimParams()):
    """A seeded fire on a small flat field, ignited in the middle."""
    rng = np.random.default_rng(seed)
    if density is None:
        density = np.where(rng.random((size, size)) < 0.6, rng.uniform(0.5, 1.5, (size, size)), 0.0)
    z = np.zeros_like(density)
    state = initial_state(density, z, z, params)
    state = ignite_spot(state, (size // 2, size // 2), 2)
    return simulate(state, params, WindSchedule.constant(wind), max_steps=steps,
                    kernel=build_kernel(params.n_r))


def random_sequence(rng, shape=(7, 5), frames=4, segments=2):
    starts = [0] + sorted(rng.choice(np.arange(1, 50), size=segments - 1, replace=False).tolist())
    wind = WindSchedule(tuple((s, tuple(rng.normal(size=2))) for s in starts))
    return FireSequence(
        density=rng.random(shape), altitude=rng.normal(size=shape) * 10, moisture=rng.random(shape),
        front=rng.random((frames,) + shape), scar=rng.random((frames,) + shape),
        fuel=rng.random((frames,) + shape), wind=wind,
        meta={"seed": int(rng.integers(1000)), "truncated": False, "note": "x"},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

"""Rollout evaluation over a set of test sequences."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bootstrap import N_SETS, BootstrapBands, bands, resample
from .dataset import NormStats
from .metrics import METRICS, TARGETS, metric_table
from .rollout import STEPS, autoregress, oracle_predictor, persistence_predictor, zero_predictor
from .sequence import FireSequence

log = logging.getLogger(__name__)

BASELINES = ("oracle", "zero", "persistence")


class PredictorFactory:
    """Picklable recipe for a fresh predictor per sequence."""

    def __init__(self, name: str, stats: NormStats, channels, model=None, t_start: int = 0,
                 history: int = 10):
        if model is None and name not in BASELINES:
            raise ValueError(f"unknown baseline {name!r}; choose from {BASELINES}")
        self.name, self.stats, self.channels = name, stats, tuple(channels)
        self.model, self.t_start, self.history = model, t_start, history

    def __call__(self, seq: FireSequence):
        if self.model is not None:
            from .neural.models import ModelPredictor
            return ModelPredictor(self.model)
        if self.name == "oracle":
            return oracle_predictor(seq, self.t_start, self.history)
        if self.name == "zero":
            return zero_predictor(self.history)
        return persistence_predictor(self.stats, self.channels, self.history)


def prepare(seq: FireSequence, t_start: int, steps: int) -> FireSequence:
    """Pad a burnt-out sequence with quiescent frames so the rollout has truth to compare against."""
    need = t_start + steps + 1
    if len(seq) >= need:
        return seq
    return seq.extended(need)


def _one(args):
    factory, seq, t_start, steps = args
    seq = prepare(seq, t_start, steps)
    res = autoregress(factory(seq), seq, factory.channels, factory.stats, t_start, steps)
    return metric_table(res.metrics())


def per_sequence_metrics(factory: PredictorFactory, sequences, t_start: int = 0, steps: int = STEPS,
                         jobs: int = 1) -> dict:
    """``{(target, metric): (S, steps) array}``, rows in sequence order."""
    work = [(factory, s, t_start, steps) for s in sequences]
    if not work:
        raise ValueError("no sequences to evaluate")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(_one, work))
    else:
        tables = []
        for k, w in enumerate(work):
            tables.append(_one(w))
            log.info("rollout %d/%d", k + 1, len(work))
    return {(t, m): np.stack([tab[(t, m)] for tab in tables]) for t in TARGETS for m in METRICS}


def bootstrap_bands(per_seq: dict, n_sets: int = N_SETS, seed: int = 0) -> BootstrapBands:
    n = next(iter(per_seq.values())).shape[0]
    return bands(per_seq, resample(n, n_sets, np.random.default_rng(seed)))

"""Corpus construction, model-input channels, normalisation and windowing."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analogue import build_kernel, simulate
from .grid import SimParams
from .seqio import read_sequence_with_header, write_sequence
from .sequence import FireSequence
from .worldgen import CORPORA, ScenarioSpec, corpus_spec, make_rng, make_scenario

log = logging.getLogger(__name__)

HISTORY = 10
VALIDATION_SIZE = 200

_BASE = ("vegetation", "scar", "front", "wind_x", "wind_y")
CHANNELS = {
    "wind": _BASE,
    "wind-slope": _BASE + ("terrain",),
    "complex": _BASE + ("terrain", "moisture"),
}
WIND_CHANNELS = frozenset({"wind_x", "wind_y"})


def corpus_name(spec: ScenarioSpec) -> str | None:
    for name, base in CORPORA.items():
        if (base.fuel_mode, base.terrain_mode, base.moisture_enabled, base.wind_mode) == (
                spec.fuel_mode, spec.terrain_mode, spec.moisture_enabled, spec.wind_mode):
            return name
    return None


def channels_for(spec_or_name) -> tuple[str, ...]:
    name = spec_or_name if isinstance(spec_or_name, str) else corpus_name(spec_or_name)
    if name not in CHANNELS:
        raise ValueError(f"no channel layout for {spec_or_name!r}")
    return CHANNELS[name]


def frame_channels(seq: FireSequence, t: int, channels) -> np.ndarray:
    """Raw (un-normalised) model input at step ``t``, shape ``(N_W, N_H, C)``."""
    fr = seq.frame(t)
    u = seq.wind.at(t)
    planes = {
        "vegetation": fr["fuel"],
        "scar": fr["scar"],
        "front": fr["front"],
        "wind_x": np.full(seq.shape, u[0]),
        "wind_y": np.full(seq.shape, u[1]),
        "terrain": seq.altitude,
        "moisture": seq.moisture,
    }
    return np.stack([planes[c] for c in channels], axis=-1)


@dataclass
class TrainingInstance:
    window: np.ndarray  # (history, N_W, N_H, C)
    label: np.ndarray  # (N_W, N_H)
    t0: int = 0


def window_instances(seq: FireSequence, t0: int, channels, history: int = HISTORY) -> TrainingInstance:
    """Frames ``t0-history+1 .. t0`` (frame 0 repeated before the start) and the next front."""
    if not 0 <= t0 < len(seq) - 1:
        raise IndexError(f"t0={t0} outside [0, {len(seq) - 1}) for a {len(seq)}-frame sequence")
    frames = [frame_channels(seq, max(t, 0), channels) for t in range(t0 - history + 1, t0 + 1)]
    return TrainingInstance(window=np.stack(frames), label=seq.front[t0 + 1].copy(), t0=t0)


def iter_instances(seq: FireSequence, channels, history: int = HISTORY):
    for t0 in range(len(seq) - 1):
        yield window_instances(seq, t0, channels, history)


@dataclass
class NormStats:
    """Per-channel scaling: min/max for wind-free channels, mean/std for wind."""

    channels: tuple[str, ...]
    lo: dict[str, float] = field(default_factory=dict)
    hi: dict[str, float] = field(default_factory=dict)
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"channels": list(self.channels), "min": self.lo, "max": self.hi,
                "mean": self.mean, "std": self.std}

    @classmethod
    def from_json(cls, data: dict) -> "NormStats":
        return cls(tuple(data["channels"]), dict(data["min"]), dict(data["max"]),
                   dict(data["mean"]), dict(data["std"]))

    def scale(self, channel: str) -> tuple[float, float]:
        """``(offset, divisor)``; a divisor of 0 marks a degenerate channel."""
        if channel in WIND_CHANNELS:
            return self.mean[channel], self.std[channel]
        return self.lo[channel], self.hi[channel] - self.lo[channel]


def _partial_stats(seq: FireSequence, channels) -> dict:
    """Per-sequence reduction merged by :func:`merge_stats`."""
    out = {"lo": {}, "hi": {}, "wind": {}}
    winds = np.array([seq.wind.at(t) for t in range(len(seq))])
    for c in channels:
        if c == "wind_x":
            out["wind"][c] = winds[:, 0]
        elif c == "wind_y":
            out["wind"][c] = winds[:, 1]
        else:
            src = {"vegetation": seq.fuel, "scar": seq.scar, "front": seq.front,
                   "terrain": seq.altitude, "moisture": seq.moisture}[c]
            out["lo"][c] = float(src.min())
            out["hi"][c] = float(src.max())
    return out


def merge_stats(partials, channels) -> NormStats:
    stats = NormStats(tuple(channels))
    parts = list(partials)
    for c in channels:
        if c in WIND_CHANNELS:
            values = np.concatenate([p["wind"][c] for p in parts])
            std = float(values.std())
            stats.mean[c] = float(values.mean())
            stats.std[c] = std if std > 0 else 1.0
        else:
            stats.lo[c] = min(p["lo"][c] for p in parts)
            stats.hi[c] = max(p["hi"][c] for p in parts)
    return stats


def compute_norm_stats(sequences, channels) -> NormStats:
    """Statistics over every frame of ``sequences`` (the training split)."""
    return merge_stats((_partial_stats(s, channels) for s in sequences), channels)


def normalize(window: np.ndarray, stats: NormStats, channels=None) -> np.ndarray:
    """Scale the trailing channel axis of ``window``; degenerate ranges map to 0."""
    channels = tuple(channels or stats.channels)
    if window.shape[-1] != len(channels):
        raise ValueError(f"window has {window.shape[-1]} channels, stats describe {len(channels)}")
    out = np.empty(window.shape, dtype=np.float64)
    for ci, c in enumerate(channels):
        offset, div = stats.scale(c)
        if div == 0:
            out[..., ci] = 0.0
        else:
            out[..., ci] = (window[..., ci] - offset) / div
    return out


def denormalize_channel(values: np.ndarray, stats: NormStats, channel: str) -> np.ndarray:
    offset, div = stats.scale(channel)
    if div == 0:
        return np.full(np.shape(values), float(offset))
    return np.asarray(values) * div + offset


def split_indices(n_sequences: int) -> dict[str, range]:
    n_test = n_sequences // 5
    return {"train": range(0, n_sequences - n_test), "test": range(n_sequences - n_test, n_sequences)}


def simulate_sequence(spec: ScenarioSpec, index: int, params: SimParams = SimParams(),
                      max_steps: int = 400, inner: int | None = None,
                      border: int | None = None) -> FireSequence:
    """Deterministic fire ``index`` of the corpus described by ``spec``."""
    rng = make_rng(spec.rng_seed, index)
    kwargs = {}
    if inner is not None:
        kwargs["inner"] = inner
    if border is not None:
        kwargs["border"] = border
    state, wind, info = make_scenario(spec, rng, params, **kwargs)
    meta = {"seed": spec.rng_seed, "index": index, "spec": spec.to_json(), **info}
    return simulate(state, params, wind, max_steps=max_steps, kernel=build_kernel(params.n_r), meta=meta)


def generate_sequences(spec: ScenarioSpec, indices, params: SimParams = SimParams(),
                       max_steps: int = 400, **kwargs) -> list[FireSequence]:
    return [simulate_sequence(spec, i, params, max_steps, **kwargs) for i in indices]


def _split_of(index: int, splits: dict[str, range]) -> str:
    for name, idx in splits.items():
        if index in idx:
            return name
    raise KeyError(index)


def _work(job):
    spec, index, split, path, params, max_steps, channels, corpus = job
    seq = simulate_sequence(spec, index, params, max_steps)
    extra = {"corpus": corpus, "input_channels": list(channels), "split": split,
             "norm_reference": "manifest.json"}
    write_sequence(path, seq, extra=extra)
    return index, split, _partial_stats(seq, channels) if split == "train" else None, seq.meta


def build_corpus(corpus, n_sequences: int, seed: int, out_dir, with_validation: bool = False,
                 params: SimParams = SimParams(), max_steps: int = 400, jobs: int = 1,
                 n_validation: int = VALIDATION_SIZE) -> dict:
    """Simulate a corpus and write it under ``out_dir``; returns the manifest.

    Sequence ``i`` uses RNG substream ``(seed, i)``. The first 80% of the
    indices form the training split, the rest the test split; with
    ``with_validation`` another ``n_validation`` sequences follow.
    """
    if n_sequences < 1:
        raise ValueError("n_sequences must be >= 1")
    spec = corpus if isinstance(corpus, ScenarioSpec) else corpus_spec(corpus, seed)
    spec = ScenarioSpec(spec.fuel_mode, spec.terrain_mode, spec.moisture_enabled, spec.wind_mode, seed)
    name = corpus_name(spec)
    channels = CHANNELS[name]
    splits = split_indices(n_sequences)
    if with_validation:
        splits["validation"] = range(n_sequences, n_sequences + n_validation)
    out_dir = Path(out_dir)
    jobs_list = []
    for split, idx in splits.items():
        try:
            (out_dir / split).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {out_dir / split}: {exc}") from exc
        for i in idx:
            path = out_dir / split / f"seq_{i:06d}.embrseq"
            jobs_list.append((spec, i, split, path, params, max_steps, channels, name))

    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, res in enumerate(pool.map(_work, jobs_list, chunksize=4)):
                results.append(res)
                log.info("sequence %d/%d done", k + 1, len(jobs_list))
    else:
        for k, job in enumerate(jobs_list):
            results.append(_work(job))
            log.info("sequence %d/%d done", k + 1, len(jobs_list))

    results.sort(key=lambda r: r[0])
    stats = merge_stats([r[2] for r in results if r[1] == "train"], channels)
    manifest = {
        "format": "EMBRSEQ1-manifest",
        "version": 1,
        "corpus": name,
        "spec": spec.to_json(),
        "seed": seed,
        "n_sequences": n_sequences,
        "channels": list(channels),
        "params": vars(params),
        "max_steps": max_steps,
        "splits": {s: [f"{s}/seq_{i:06d}.embrseq" for i in idx] for s, idx in splits.items()},
        "burnout_steps": {str(r[0]): r[3]["burnout_step"] for r in results},
        "truncated": sorted(r[0] for r in results if r[3]["truncated"]),
        "norm_stats": stats.to_json(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


def load_manifest(data_dir) -> dict:
    path = Path(data_dir) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc


def load_split(data_dir, split: str) -> list[FireSequence]:
    manifest = load_manifest(data_dir)
    if split not in manifest["splits"]:
        raise KeyError(f"{data_dir} has no {split!r} split")
    return [read_sequence_with_header(Path(data_dir) / rel)[0] for rel in manifest["splits"][split]]


def training_arrays(sequences, channels, stats: NormStats | None, history: int = HISTORY,
                    windows_per_seq: int | None = None, crop: int | None = None,
                    rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stack (normalised) windows and labels for training.

    ``windows_per_seq`` subsamples start steps; ``crop`` cuts a square
    patch around a random cell of the target front so desk-scale models can
    be trained on small tiles.
    """
    rng = rng or np.random.default_rng(0)
    xs, ys = [], []
    for seq in sequences:
        t0s = np.arange(len(seq) - 1)
        if windows_per_seq is not None and windows_per_seq < t0s.size:
            t0s = np.sort(rng.choice(t0s, size=windows_per_seq, replace=False))
        for t0 in t0s:
            inst = window_instances(seq, int(t0), channels, history)
            x, y = inst.window, inst.label
            if crop is not None:
                x, y = _crop_around_fire(x, y, crop, rng)
            xs.append(normalize(x, stats, channels) if stats is not None else x)
            ys.append(y)
    return np.stack(xs), np.stack(ys)


def _crop_around_fire(x: np.ndarray, y: np.ndarray, size: int, rng: np.random.Generator):
    m, n = y.shape
    if size > min(m, n):
        raise ValueError(f"crop {size} larger than field {y.shape}")
    hot = np.argwhere(y > 0)
    if hot.size == 0:
        hot = np.argwhere(x[-1, ..., 2] > 0) if x.shape[-1] > 2 else hot
    if hot.size:
        ci, cj = hot[rng.integers(len(hot))]
        ci += rng.integers(-size // 4, size // 4 + 1)
        cj += rng.integers(-size // 4, size // 4 + 1)
    else:
        ci, cj = m // 2, n // 2
    i0 = int(np.clip(ci - size // 2, 0, m - size))
    j0 = int(np.clip(cj - size // 2, 0, n - size))
    return x[:, i0:i0 + size, j0:j0 + size].copy(), y[i0:i0 + size, j0:j0 + size].copy()

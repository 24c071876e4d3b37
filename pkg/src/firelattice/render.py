"""Netpbm rendering of sequence frames and prediction error maps.

Images put east to the right and north up, so row 0 of the image is the
largest ``n`` index of the field.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .metrics import JSC_THRESHOLD
from .sequence import FireSequence

GREY = (128, 128, 128)
RED = (255, 0, 0)
BLUE = (0, 0, 255)


def to_image(field: np.ndarray) -> np.ndarray:
    return np.asarray(field).T[::-1]


def scale_u8(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        return np.zeros(np.shape(values), dtype=np.uint8)
    v = (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)
    return np.clip(np.rint(v * 255), 0, 255).astype(np.uint8)


def pgm_bytes(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def ppm_bytes(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def read_pnm(data: bytes) -> np.ndarray:
    """Parse the P5/P6 files written here (no comments, maxval 255)."""
    parts = data.split(b"\n", 3)
    magic, dims, maxval, raster = parts
    w, h = map(int, dims.split())
    if int(maxval) != 255:
        raise ValueError("only 8-bit images are supported")
    if magic == b"P5":
        return np.frombuffer(raster, np.uint8, w * h).reshape(h, w)
    if magic == b"P6":
        return np.frombuffer(raster, np.uint8, w * h * 3).reshape(h, w, 3)
    raise ValueError(f"unsupported netpbm magic {magic!r}")


def render_frames(seq: FireSequence, out_dir, channel: str = "front") -> list[Path]:
    """One P5 image per frame, scaled by the channel's range over the whole sequence."""
    stack = getattr(seq, channel)
    lo, hi = float(stack.min()), float(stack.max())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(len(seq)):
        p = out_dir / f"{channel}_{t:04d}.pgm"
        p.write_bytes(pgm_bytes(scale_u8(to_image(stack[t]), lo, hi)))
        paths.append(p)
    return paths


def error_map(pred: np.ndarray, truth: np.ndarray, threshold: float = JSC_THRESHOLD) -> np.ndarray:
    """RGB classification errors: red for false fire, blue for missed fire, grey for hits."""
    p = to_image(pred) > threshold
    t = to_image(truth) > threshold
    img = np.zeros(p.shape + (3,), dtype=np.uint8)
    img[p & t] = GREY
    img[p & ~t] = RED
    img[~p & t] = BLUE
    return img


def composite(pred: np.ndarray, truth: np.ndarray, threshold: float = JSC_THRESHOLD,
              gap: int = 2) -> np.ndarray:
    """``[truth | prediction | error map]`` side by side, truth and prediction on a shared scale."""
    lo = float(min(pred.min(), truth.min()))
    hi = float(max(pred.max(), truth.max()))
    grey = [np.repeat(scale_u8(to_image(a), lo, hi)[..., None], 3, axis=2) for a in (truth, pred)]
    sep = np.full((grey[0].shape[0], gap, 3), 255, dtype=np.uint8)
    return np.concatenate([grey[0], sep, grey[1], sep, error_map(pred, truth, threshold)], axis=1)


def render_comparison(pred: FireSequence, truth: FireSequence, out_dir, channel: str = "front",
                      threshold: float = JSC_THRESHOLD) -> list[Path]:
    if len(pred) != len(truth) or pred.shape != truth.shape:
        raise ValueError("prediction and truth sequences are not aligned")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(len(pred)):
        p = out_dir / f"compare_{channel}_{t:04d}.ppm"
        p.write_bytes(ppm_bytes(composite(getattr(pred, channel)[t], getattr(truth, channel)[t], threshold)))
        paths.append(p)
    return paths

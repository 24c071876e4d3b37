"""EMBRMDL1 model checkpoints.

Layout: magic ``b"EMBRMDL1"``, a little-endian uint32 header length, a
UTF-8 JSON header ``{"format", "version", "arch", "params": [{"name",
"shape"}, ...]}`` and the parameters as little-endian float64, row-major,
concatenated in header order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .models import Model, model_from_config

MAGIC = b"EMBRMDL1"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode_model(model: Model, extra: dict | None = None) -> bytes:
    header = {
        "format": "EMBRMDL1",
        "version": VERSION,
        "arch": model.config,
        "params": [{"name": k, "shape": list(v.shape)} for k, v in model.params.items()],
    }
    if extra:
        header["extra"] = extra
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in model.params.values())
    return MAGIC + struct.pack("<I", len(head)) + head + blob


def decode_model(data: bytes, source: str = "<bytes>") -> tuple[Model, dict]:
    if data[:8] != MAGIC:
        raise CheckpointError(f"{source}: bad magic, not an EMBRMDL1 checkpoint")
    if len(data) < 12:
        raise CheckpointError(f"{source}: truncated header")
    (hlen,) = struct.unpack_from("<I", data, 8)
    try:
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: unreadable header ({exc})") from None
    if header.get("version") != VERSION:
        raise CheckpointError(f"{source}: unsupported version {header.get('version')!r}")
    model = model_from_config(header["arch"])
    offset = 12 + hlen
    for entry in header["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in model.params or model.params[name].shape != shape:
            raise CheckpointError(f"{source}: parameter {name} {shape} does not fit the architecture")
        count = int(np.prod(shape))
        if offset + 8 * count > len(data):
            raise CheckpointError(f"{source}: truncated parameter blob at {name}")
        model.params[name] = np.frombuffer(data, "<f8", count, offset).astype(np.float64).reshape(shape)
        offset += 8 * count
    if offset != len(data):
        raise CheckpointError(f"{source}: {len(data) - offset} trailing bytes")
    return model, header


def save_model(path, model: Model, extra: dict | None = None) -> None:
    try:
        Path(path).write_bytes(encode_model(model, extra))
    except OSError as exc:
        raise OSError(f"cannot write checkpoint {path}: {exc}") from exc


def load_model(path) -> tuple[Model, dict]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode_model(data, str(path))

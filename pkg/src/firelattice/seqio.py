"""EMBRSEQ1 sequence files.

Layout::

    8 bytes   magic b"EMBRSEQ1"
    4 bytes   header length L, unsigned little-endian
    L bytes   UTF-8 JSON header
    payload   raw little-endian floats, row-major

The header declares ``dims`` ([N_W, N_H]), ``T``, ``dtype`` ("<f8" or
"<f4"), ``static_channels``, ``frame_channels``, the wind segments and
free-form ``meta``. The payload holds each static channel (N_W*N_H values)
and then each frame channel (T*N_W*N_H values, time-major within the
channel) in the declared order. Index ``[m, n]``: m runs east, n north.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .sequence import FRAME_CHANNELS, STATIC_CHANNELS, FireSequence, WindSchedule

MAGIC = b"EMBRSEQ1"
VERSION = 1
DTYPES = ("<f8", "<f4")


class SequenceFormatError(ValueError):
    pass


class BadMagicError(SequenceFormatError):
    pass


class VersionError(SequenceFormatError):
    pass


class TruncatedPayloadError(SequenceFormatError):
    pass


class NonFiniteError(SequenceFormatError):
    pass


class ChannelCountError(SequenceFormatError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def encode_sequence(seq: FireSequence, dtype: str = "<f8", extra: dict | None = None) -> bytes:
    if dtype not in DTYPES:
        raise ValueError(f"dtype must be one of {DTYPES}")
    arrays = [getattr(seq, c) for c in STATIC_CHANNELS] + [getattr(seq, c) for c in FRAME_CHANNELS]
    for name, arr in zip(STATIC_CHANNELS + FRAME_CHANNELS, arrays):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"channel {name} contains non-finite values")
    header = {
        "format": "EMBRSEQ1",
        "version": VERSION,
        "dims": list(seq.shape),
        "T": len(seq),
        "dtype": dtype,
        "order": "row-major; static channels then frame channels, each time-major",
        "static_channels": list(STATIC_CHANNELS),
        "frame_channels": list(FRAME_CHANNELS),
        "wind": seq.wind.to_json(),
        "meta": _jsonable(seq.meta),
    }
    if extra:
        header.update(_jsonable(extra))
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(a, dtype=dtype).tobytes() for a in arrays)
    return MAGIC + struct.pack("<I", len(head)) + head + payload


def decode_sequence(data: bytes, source: str = "<bytes>") -> tuple[FireSequence, dict]:
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{source}: bad magic, not an EMBRSEQ1 file")
    if len(data) < len(MAGIC) + 4:
        raise TruncatedPayloadError(f"{source}: truncated header")
    (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    if len(data) < start + hlen:
        raise TruncatedPayloadError(f"{source}: truncated header")
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SequenceFormatError(f"{source}: unreadable header ({exc})") from None
    if header.get("version") != VERSION:
        raise VersionError(f"{source}: unsupported version {header.get('version')!r}")
    dtype = header.get("dtype", "<f4")
    if dtype not in DTYPES:
        raise SequenceFormatError(f"{source}: unsupported dtype {dtype!r}")
    m, n = header["dims"]
    t = int(header["T"])
    statics = header["static_channels"]
    frames = header["frame_channels"]
    if tuple(statics) != STATIC_CHANNELS or tuple(frames) != FRAME_CHANNELS:
        raise SequenceFormatError(f"{source}: unexpected channel layout {statics} / {frames}")
    _check_input_channels(header, source)

    itemsize = np.dtype(dtype).itemsize
    counts = [m * n] * len(statics) + [t * m * n] * len(frames)
    expected = sum(counts) * itemsize
    payload = memoryview(data)[start + hlen:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{source}: truncated payload, header declares T={t} ({expected} bytes) "
            f"but {len(payload)} bytes follow")
    arrays = []
    offset = 0
    for count in counts:
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).astype(np.float64)
        offset += count * itemsize
        arrays.append(arr)
    fields = {}
    for name, arr in zip(statics, arrays[:len(statics)]):
        fields[name] = arr.reshape(m, n)
    for name, arr in zip(frames, arrays[len(statics):]):
        fields[name] = arr.reshape(t, m, n)
    for name, arr in fields.items():
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"{source}: channel {name} contains non-finite values")
    seq = FireSequence(wind=WindSchedule.from_json(header["wind"]), meta=header.get("meta", {}), **fields)
    return seq, header


def _check_input_channels(header: dict, source: str) -> None:
    from .dataset import CHANNELS

    corpus = header.get("corpus")
    channels = header.get("input_channels")
    if corpus is None or channels is None:
        return
    if corpus in CHANNELS and len(channels) != len(CHANNELS[corpus]):
        raise ChannelCountError(
            f"{source}: corpus {corpus!r} needs {len(CHANNELS[corpus])} input channels, "
            f"header lists {len(channels)}")


def write_sequence(path, seq: FireSequence, dtype: str = "<f8", extra: dict | None = None) -> None:
    path = Path(path)
    try:
        path.write_bytes(encode_sequence(seq, dtype, extra))
    except OSError as exc:
        raise OSError(f"cannot write sequence file {path}: {exc}") from exc


def read_sequence(path) -> FireSequence:
    return read_sequence_with_header(path)[0]


def read_sequence_with_header(path) -> tuple[FireSequence, dict]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read sequence file {path}: {exc}") from exc
    return decode_sequence(data, str(path))

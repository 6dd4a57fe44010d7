"""WAV audio I/O, model JSON ingestion, and report serialization."""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass

import numpy as np

from .model import RnnModel

log = logging.getLogger(__name__)


class WavFormatError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray     # mono float64, PCM normalized to [-1, 1]
    sample_rate: int
    source_format: str      # pcm16 | pcm24 | float32


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file: PCM16, PCM24 or Float32, mono or channel 0."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        if pos + size > len(data):
            raise WavFormatError(f"{path}: chunk {cid!r} truncated at offset {pos}")
        body = data[pos:pos + size]
        pos += size + (size & 1)
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError(f"{path}: fmt chunk too short ({size} bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            payload = body
    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if payload is None or len(payload) == 0:
        raise WavFormatError(f"{path}: missing or empty data chunk")

    audio_format, channels, rate, _, block_align, bits = fmt
    if channels < 1:
        raise WavFormatError(f"{path}: zero channels")
    if audio_format == 1 and bits == 16:
        tag = "pcm16"
        raw = np.frombuffer(payload[:len(payload) - len(payload) % block_align],
                            dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 1 and bits == 24:
        tag = "pcm24"
        usable = len(payload) - len(payload) % block_align
        b = np.frombuffer(payload[:usable], dtype=np.uint8).reshape(-1, 3)
        vals = (b[:, 0].astype(np.int32)
                | (b[:, 1].astype(np.int32) << 8)
                | (b[:, 2].astype(np.int32) << 16))
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        raw = vals.astype(np.float64) / float(1 << 23)
    elif audio_format == 3 and bits == 32:
        tag = "float32"
        raw = np.frombuffer(payload[:len(payload) - len(payload) % block_align],
                            dtype="<f4").astype(np.float64)
    else:
        raise WavFormatError(f"{path}: unsupported codec (format {audio_format}, {bits}-bit)")

    samples = raw.reshape(-1, channels)[:, 0].copy()
    if channels > 1:
        log.warning("%s: %d channels, keeping channel 0", path, channels)
    return AudioBuffer(samples, rate, tag)


def write_wav(path, buffer: AudioBuffer, fmt: str | None = None) -> None:
    """Write a mono WAV; round-trips bit-exactly for float32, <=1 LSB for PCM."""
    fmt = fmt or buffer.source_format
    samples = np.asarray(buffer.samples, dtype=np.float64)
    if not np.all(np.isfinite(samples)):
        raise ValueError("cannot write non-finite samples")
    if fmt == "pcm16":
        audio_format, bits = 1, 16
        clipped = np.clip(np.round(samples * 32768.0), -32768, 32767)
        payload = clipped.astype("<i2").tobytes()
    elif fmt == "pcm24":
        audio_format, bits = 1, 24
        vals = np.clip(np.round(samples * float(1 << 23)),
                       -(1 << 23), (1 << 23) - 1).astype(np.int32)
        b = np.empty((len(vals), 3), dtype=np.uint8)
        b[:, 0] = vals & 0xFF
        b[:, 1] = (vals >> 8) & 0xFF
        b[:, 2] = (vals >> 16) & 0xFF
        payload = b.tobytes()
    elif fmt == "float32":
        audio_format, bits = 3, 32
        payload = samples.astype("<f4").tobytes()
    else:
        raise ValueError(f"unsupported output format {fmt!r}")

    block_align = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, audio_format, 1, buffer.sample_rate,
        buffer.sample_rate * block_align, block_align, bits,
        b"data", len(payload))
    with open(path, "wb") as fh:
        fh.write(header + payload)


_REQUIRED_KEYS = ("rec.weight_ih_l0", "rec.weight_hh_l0",
                  "rec.bias_ih_l0", "rec.bias_hh_l0",
                  "lin.weight", "lin.bias")


def load_model(path) -> RnnModel:
    """Load an LSTM model from the JSON state_dict convention.

    Expects `model_data` with hidden_size / unit_type / input_size and a
    `state_dict` with rec.* / lin.* keys. Unknown keys are ignored.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    meta = doc.get("model_data")
    sd = doc.get("state_dict")
    if not isinstance(meta, dict) or not isinstance(sd, dict):
        raise ModelFormatError(f"{path}: missing model_data or state_dict object")
    unit = meta.get("unit_type", "")
    if str(unit).upper() != "LSTM":
        raise ModelFormatError(f"{path}: unsupported unit_type {unit!r}")
    hidden = int(meta.get("hidden_size", 0))
    input_size = int(meta.get("input_size", 1))
    if hidden < 1:
        raise ModelFormatError(f"{path}: bad hidden_size {hidden}")

    arrays = {}
    for key in _REQUIRED_KEYS:
        if key not in sd:
            raise ModelFormatError(f"{path}: missing state_dict key {key!r}")
        arrays[key] = np.asarray(sd[key], dtype=np.float64)

    def shaped(key, shape):
        arr = arrays[key]
        if arr.size != int(np.prod(shape)):
            raise ModelFormatError(
                f"{path}: key {key!r} has {arr.size} values, expected {int(np.prod(shape))}")
        return arr.reshape(shape)

    w_ih = shaped("rec.weight_ih_l0", (4 * hidden, input_size))
    w_hh = shaped("rec.weight_hh_l0", (4 * hidden, hidden))
    b = shaped("rec.bias_ih_l0", (4 * hidden,)) + shaped("rec.bias_hh_l0", (4 * hidden,))
    lin_w = arrays["lin.weight"]
    has_direct = lin_w.size == hidden + input_size
    if has_direct:
        lin_w = lin_w.reshape(1, hidden + input_size)
        out_w, direct_w = lin_w[:, :hidden], float(lin_w[0, hidden])
    else:
        out_w, direct_w = shaped("lin.weight", (1, hidden)), 0.0
    out_b = float(np.asarray(arrays["lin.bias"]).reshape(-1)[0])

    return RnnModel(
        hidden_size=hidden, w_ih=w_ih, w_hh=w_hh, b=b, out_w=out_w, out_b=out_b,
        train_rate=float(meta.get("sample_rate", 44100) or 44100),
        has_direct_term=has_direct, direct_w=direct_w,
        name=os.path.splitext(os.path.basename(str(path)))[0])


def fmt_float(x) -> str:
    """Fixed 17-significant-digit float formatting for deterministic reports."""
    if isinstance(x, float):
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows) -> None:
    """RFC-4180 CSV with deterministic float formatting."""
    import csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_float(v) for v in row])


def json_ready(obj):
    """Recursively convert numpy scalars/arrays and format floats as strings-safe values."""
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    """UTF-8 JSON with sorted keys; non-finite floats serialized as strings."""
    def default(o):
        raise TypeError(f"not serializable: {type(o)}")

    doc = json.dumps(_finitize(json_ready(obj)), sort_keys=True, indent=2,
                     allow_nan=False, default=default)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc + "\n")


def _finitize(obj):
    if isinstance(obj, dict):
        return {k: _finitize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finitize(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return fmt_float(obj)
    return obj

"""Bit extraction from tag streams (colour or timestamp parity) and export."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stream import RED, TagStream

COLOR = "color"
TIME_PARITY = "time_parity"
DEFAULT_DIGIT_PERIOD = 10e-9

_BITS_MAGIC = b"ARNGBT"
_BITS_HEADER = struct.Struct("<6sHQI")


@dataclass(eq=False)
class BitStream:
    bits: np.ndarray
    ticks: np.ndarray | None = None
    scheme: str = COLOR
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1 or np.any(self.bits > 1):
            raise ValueError("bits must be a 1-d array of 0/1")
        if self.ticks is None:
            self.ticks = np.arange(self.bits.size, dtype=np.int64)
        self.ticks = np.asarray(self.ticks, dtype=np.int64)
        if self.ticks.shape != self.bits.shape:
            raise ValueError("bits and ticks differ in length")

    def __len__(self):
        return self.bits.size

    @classmethod
    def from_array(cls, bits, **metadata) -> "BitStream":
        return cls(np.asarray(bits, dtype=np.uint8), scheme=metadata.pop("scheme", "synthetic"), metadata=metadata)


def bits_from_color(stream: TagStream) -> BitStream:
    """Blue detections become 0, red detections 1."""
    bits = (stream.channels == RED).astype(np.uint8)
    return BitStream(bits, stream.ticks.copy(), COLOR, {"clock_fs": stream.clock_fs})


def bits_from_time_parity(stream: TagStream, digit_period: float = DEFAULT_DIGIT_PERIOD) -> BitStream:
    """Bit = parity of ``floor(event_time / digit_period)``."""
    period_fs = int(round(digit_period * 1e15))
    if period_fs < stream.clock_fs:
        raise ValueError("digit_period must be at least one clock tick")
    ticks = stream.ticks
    if ticks.size and int(ticks.max()) > np.iinfo(np.int64).max // stream.clock_fs:
        t_fs = [int(t) * stream.clock_fs for t in ticks.tolist()]
        bits = np.array([(t // period_fs) & 1 for t in t_fs], dtype=np.uint8)
    else:
        bits = ((ticks * stream.clock_fs) // period_fs % 2).astype(np.uint8)
    return BitStream(
        bits,
        ticks.copy(),
        TIME_PARITY,
        {"clock_fs": stream.clock_fs, "digit_period_fs": period_fs},
    )


def imbalance_report(bits: BitStream, window: int = 10_000) -> dict:
    """Global ones fraction and per-window drift."""
    n = len(bits)
    if n == 0:
        raise ValueError("empty bit stream")
    ones = int(bits.bits.sum())
    n_win = n // window
    drift = []
    if n_win:
        drift = bits.bits[: n_win * window].reshape(n_win, window).mean(axis=1).tolist()
    return {
        "n_bits": n,
        "ones": ones,
        "zeros": n - ones,
        "ones_fraction": ones / n,
        "ones_fraction_stderr": float(np.sqrt(max(ones * (n - ones), 0) / n**3)),
        "window": window,
        "window_ones_fraction": drift,
    }


# ---------------------------------------------------------------- export


def nist_ascii(bits: BitStream, line_length: int = 80) -> str:
    """'0'/'1' characters, a newline after every ``line_length``."""
    s = bits.bits.astype(np.uint8) + ord("0")
    text = s.tobytes().decode("ascii")
    return "".join(text[i:i + line_length] + "\n" for i in range(0, len(text), line_length))


def write_nist_ascii(path, bits: BitStream, line_length: int = 80) -> None:
    Path(path).write_text(nist_ascii(bits, line_length))


def read_nist_ascii(path) -> BitStream:
    text = "".join(Path(path).read_text().split())
    if set(text) - {"0", "1"}:
        raise ValueError(f"{path}: not a 0/1 ASCII file")
    return BitStream(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"), scheme="ascii")


def encode_bits(bits: BitStream) -> bytes:
    """Packed form: header (magic, version, n_bits, meta length), JSON meta,
    then ``numpy.packbits`` payload (MSB first)."""
    meta = dict(bits.metadata)
    meta["scheme"] = bits.scheme
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    return _BITS_HEADER.pack(_BITS_MAGIC, 1, len(bits), len(blob)) + blob + np.packbits(bits.bits).tobytes()


def decode_bits(data: bytes) -> BitStream:
    if len(data) < _BITS_HEADER.size:
        raise ValueError("not a packed bit file")
    magic, version, n, mlen = _BITS_HEADER.unpack_from(data)
    if magic != _BITS_MAGIC or version != 1:
        raise ValueError("not a packed bit file")
    off = _BITS_HEADER.size
    meta = json.loads(data[off:off + mlen].decode())
    payload = np.frombuffer(data, dtype=np.uint8, offset=off + mlen)
    bits = np.unpackbits(payload)[:n]
    if bits.size != n:
        raise ValueError("truncated bit file")
    scheme = meta.pop("scheme", COLOR)
    return BitStream(bits, scheme=scheme, metadata=meta)


def write_bits(path, bits: BitStream) -> None:
    Path(path).write_bytes(encode_bits(bits))


def read_bits(path) -> BitStream:
    data = Path(path).read_bytes()
    if data[:6] == _BITS_MAGIC:
        return decode_bits(data)
    return read_nist_ascii(path)

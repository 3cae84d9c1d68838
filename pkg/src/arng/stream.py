"""Time-tag streams and their on-disk formats.

Binary layout (little-endian)::

    offset 0   6s   magic  b"ARNGTT"
    offset 6   u16  format version (1)
    offset 8   u32  clock tick in femtoseconds
    offset 12  u32  length M of the embedded JSON manifest
    offset 16  M    manifest (UTF-8 JSON, may be empty)
    ...        9*n  records: u8 channel (0 blue, 1 red), u64 tick

Origin labels are simulation ground truth and are not written.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import greedy_gap_mask

BLUE, RED = 0, 1
CHANNEL_NAMES = ("blue", "red")

ASTRONOMICAL, WRONGWAY, SKYGLOW, DARK, UNKNOWN = 0, 1, 2, 3, 255
ORIGIN_NAMES = {ASTRONOMICAL: "astronomical", WRONGWAY: "wrongway", SKYGLOW: "skyglow", DARK: "dark"}

MAGIC = b"ARNGTT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<6sHII")
RECORD_DTYPE = np.dtype([("channel", "<u1"), ("tick", "<u8")])
DEFAULT_CLOCK_FS = 80955


class StreamFormatError(ValueError):
    pass


@dataclass(eq=False)
class TagStream:
    """Detection events ordered by tick (ties broken by channel)."""

    ticks: np.ndarray
    channels: np.ndarray
    clock_fs: int = DEFAULT_CLOCK_FS
    origins: np.ndarray | None = None
    duration: float | None = None
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ticks = np.asarray(self.ticks, dtype=np.int64)
        self.channels = np.asarray(self.channels, dtype=np.uint8)
        if self.ticks.shape != self.channels.shape or self.ticks.ndim != 1:
            raise ValueError("ticks and channels must be 1-d and equal length")
        if self.origins is not None:
            self.origins = np.asarray(self.origins, dtype=np.uint8)
            if self.origins.shape != self.ticks.shape:
                raise ValueError("origins length mismatch")
        if int(self.clock_fs) <= 0:
            raise ValueError("clock tick must be positive")
        self.clock_fs = int(self.clock_fs)

    def __len__(self):
        return self.ticks.size

    @property
    def clock_tick(self) -> float:
        """Clock tick in seconds."""
        return self.clock_fs * 1e-15

    @property
    def times(self) -> np.ndarray:
        return self.ticks * self.clock_tick

    @property
    def span(self) -> float:
        """Observation length in seconds: configured duration if known, else event span."""
        if self.duration is not None:
            return float(self.duration)
        if len(self) < 2:
            return 0.0
        return float((self.ticks[-1] - self.ticks[0]) * self.clock_tick)

    def subset(self, mask) -> "TagStream":
        return TagStream(
            self.ticks[mask],
            self.channels[mask],
            self.clock_fs,
            None if self.origins is None else self.origins[mask],
            self.duration,
            dict(self.manifest),
        )

    def counts(self) -> dict:
        return {name: int(np.count_nonzero(self.channels == c)) for c, name in enumerate(CHANNEL_NAMES)}

    def origin_counts(self) -> dict:
        """Ground-truth tallies per channel and origin (empty if unlabeled)."""
        if self.origins is None:
            return {}
        out = {}
        for c, cname in enumerate(CHANNEL_NAMES):
            sel = self.origins[self.channels == c]
            out[cname] = {name: int(np.count_nonzero(sel == o)) for o, name in ORIGIN_NAMES.items()}
        return out

    def equals(self, other: "TagStream") -> bool:
        return (
            self.clock_fs == other.clock_fs
            and np.array_equal(self.ticks, other.ticks)
            and np.array_equal(self.channels, other.channels)
        )


def cross_channel_deadtime_filter(stream: TagStream, window: float = 420e-9, backend=None) -> TagStream:
    """Drop any event within ``window`` seconds of the previous kept event on
    either channel. Idempotent; afterwards every gap is at least ``window``."""
    if window < 0:
        raise ValueError("window must be non-negative")
    window_fs = round(window * 1e15)
    mask = greedy_gap_mask(stream.ticks, window_fs / stream.clock_fs, strict=True, backend=backend)
    return stream.subset(mask)


# ---------------------------------------------------------------- codecs


def encode_stream(stream: TagStream, manifest: dict | None = None) -> bytes:
    manifest = stream.manifest if manifest is None else manifest
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode() if manifest else b""
    if np.any(stream.ticks < 0):
        raise ValueError("negative ticks cannot be encoded")
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["channel"] = stream.channels
    rec["tick"] = stream.ticks.astype(np.uint64)
    return _HEADER.pack(MAGIC, FORMAT_VERSION, stream.clock_fs, len(blob)) + blob + rec.tobytes()


def decode_stream(data: bytes) -> TagStream:
    if len(data) < _HEADER.size:
        raise StreamFormatError("file too short for header")
    magic, version, clock_fs, mlen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StreamFormatError(f"unsupported stream format version {version}")
    body = _HEADER.size + mlen
    if len(data) < body or (len(data) - body) % RECORD_DTYPE.itemsize:
        raise StreamFormatError("truncated stream file")
    manifest = json.loads(data[_HEADER.size:body].decode()) if mlen else {}
    rec = np.frombuffer(data, dtype=RECORD_DTYPE, offset=body)
    if np.any(rec["channel"] > 1):
        raise StreamFormatError("channel id out of range")
    duration = manifest.get("duration") if isinstance(manifest, dict) else None
    return TagStream(
        rec["tick"].astype(np.int64),
        rec["channel"].copy(),
        clock_fs,
        duration=duration,
        manifest=manifest,
    )


def write_stream(path, stream: TagStream, manifest: dict | None = None) -> None:
    Path(path).write_bytes(encode_stream(stream, manifest))


def read_stream(path) -> TagStream:
    return decode_stream(Path(path).read_bytes())


def write_stream_text(path, stream: TagStream) -> None:
    """Debug export: one ``channel tick`` pair per line."""
    with open(path, "w") as fh:
        fh.write(f"# clock_fs {stream.clock_fs}\n# channel tick\n")
        for c, t in zip(stream.channels.tolist(), stream.ticks.tolist()):
            fh.write(f"{c} {t}\n")


def read_stream_text(path) -> TagStream:
    clock_fs = DEFAULT_CLOCK_FS
    chans, ticks = [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "clock_fs":
                clock_fs = int(parts[1])
            continue
        if line:
            c, t = line.split()
            chans.append(int(c))
            ticks.append(int(t))
    return TagStream(np.array(ticks, dtype=np.int64), np.array(chans, dtype=np.uint8), clock_fs)

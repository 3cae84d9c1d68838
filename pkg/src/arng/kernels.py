"""Backend selection for the hot loops.

The Cython extension is preferred; set ``ARNG_PURE_PYTHON=1`` to force the
fallback (the test-suite also checks the two agree).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ARNG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels


def greedy_gap_mask(times, gap: float, strict: bool = False, backend=None) -> np.ndarray:
    """Boolean keep-mask of a greedy forward pass over sorted ``times``.

    An event survives when its distance to the most recent *surviving* event
    is ``> gap`` (``strict``) or ``>= gap``. The first event always survives.
    """
    impl = _select(backend)
    times = np.ascontiguousarray(times)
    if times.dtype.kind in "iu":
        times = times.astype(np.int64, copy=False)
    else:
        times = times.astype(np.float64, copy=False)
    return impl.greedy_gap_mask(times, float(gap), bool(strict))


def ngram_counts(bits, k: int, start: int = 0, stop: int | None = None, backend=None) -> np.ndarray:
    """Histogram of overlapping ``k``-bit windows inside ``bits[start:stop]``."""
    impl = _select(backend)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if stop is None:
        stop = bits.shape[0]
    return impl.ngram_counts(bits, int(k), int(start), int(stop))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")

"""Pure-Python/numpy versions of the compiled kernels.

Used when the extension is not built or ``ARNG_PURE_PYTHON=1`` is set.
Semantics are identical to ``_ckernels``.
"""

from __future__ import annotations

import numpy as np


def greedy_gap_mask(times, gap, strict):
    times = np.asarray(times)
    n = times.shape[0]
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    keep[0] = True
    values = times.tolist()
    last = values[0]
    if strict:
        for i in range(1, n):
            t = values[i]
            if t - last > gap:
                keep[i] = True
                last = t
    else:
        for i in range(1, n):
            t = values[i]
            if t - last >= gap:
                keep[i] = True
                last = t
    return keep


def ngram_counts(bits, k, start, stop):
    seg = np.asarray(bits[start:stop], dtype=np.int64) & 1
    n_windows = seg.shape[0] - k + 1
    if n_windows <= 0:
        return np.zeros(1 << k, dtype=np.int64)
    codes = np.zeros(n_windows, dtype=np.int64)
    for j in range(k):
        codes = (codes << 1) | seg[j:j + n_windows]
    return np.bincount(codes, minlength=1 << k).astype(np.int64)

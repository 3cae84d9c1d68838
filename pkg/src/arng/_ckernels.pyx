# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for event filtering and n-gram counting."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t

cnp.import_array()

ctypedef fused time_t:
    int64_t
    double


def greedy_gap_mask(const time_t[::1] times, double gap, bint strict):
    """Keep an event iff it is more than (or at least, if not strict) ``gap``
    after the last kept event. ``times`` must be sorted."""
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t i
    cdef double last
    cdef double t
    out = np.zeros(n, dtype=np.bool_)
    cdef uint8_t[::1] keep = out.view(np.uint8)
    if n == 0:
        return out
    keep[0] = 1
    last = <double>times[0]
    if strict:
        for i in range(1, n):
            t = <double>times[i]
            if t - last > gap:
                keep[i] = 1
                last = t
    else:
        for i in range(1, n):
            t = <double>times[i]
            if t - last >= gap:
                keep[i] = 1
                last = t
    return out


def ngram_counts(const uint8_t[::1] bits, int k, Py_ssize_t start, Py_ssize_t stop):
    """Counts of every overlapping k-bit window lying wholly inside
    ``bits[start:stop]``. Index is the window read MSB-first."""
    cdef Py_ssize_t i
    cdef int64_t code = 0
    cdef int64_t mask = (1 << k) - 1
    counts = np.zeros(1 << k, dtype=np.int64)
    cdef int64_t[::1] c = counts
    if stop - start < k:
        return counts
    for i in range(start, start + k - 1):
        code = ((code << 1) | (bits[i] & 1)) & mask
    for i in range(start + k - 1, stop):
        code = ((code << 1) | (bits[i] & 1)) & mask
        c[code] += 1
    return counts

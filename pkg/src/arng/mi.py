"""History/next-bit mutual information with finite-sample bias removal.

The plug-in estimate over overlapping ``(m+1)``-bit windows is biased
upward. Assuming ``I_hat(N) = I + a/N + b/N**2`` and estimating at N, N/2
(mean of two contiguous halves) and N/4 (mean of four quarters) gives
``I = (8u - 6v + w) / 3``. Significance is judged against surrogate
bitstreams with the same length and ones-fraction but no memory.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bits import BitStream
from .kernels import ngram_counts
from .stream import TagStream

DEFAULT_SURROGATES = 50
DEFAULT_DEPTHS = tuple(range(1, 7))
DEFAULT_Z_CRIT = 3.0


class InsufficientDataError(ValueError):
    pass


def _as_bits(bits) -> np.ndarray:
    if isinstance(bits, BitStream):
        return bits.bits
    return np.ascontiguousarray(bits, dtype=np.uint8)


def _mi_from_counts(counts: np.ndarray) -> float:
    joint = counts.reshape(-1, 2).astype(float)
    total = joint.sum()
    if total <= 0:
        return 0.0
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    val = float(np.sum(p[nz] * np.log2(p[nz] / (px * py)[nz])))
    return max(val, 0.0)


def _segment_mi(arr, m, start, stop, backend=None) -> float:
    return _mi_from_counts(ngram_counts(arr, m + 1, start, stop, backend=backend))


def plugin_mutual_information(bits, m: int, backend=None) -> float:
    """Plug-in I(m; m+1) in bits between an m-bit history and the next bit."""
    arr = _as_bits(bits)
    _require(arr.size, m, 4)
    return _segment_mi(arr, m, 0, arr.size, backend)


def _require(n, m, extra):
    if m < 1:
        raise ValueError("lookback depth m must be >= 1")
    need = 2 ** (m + extra)
    if n < need:
        raise InsufficientDataError(f"m={m} needs at least {need} bits, got {n}")


@dataclass(frozen=True)
class MIEstimate:
    m: int
    N: int
    plugin_value: float
    corrected_value: float
    a_hat: float
    b_hat: float
    half_mean: float
    quarter_mean: float

    def to_dict(self) -> dict:
        return asdict(self)


def solve_bias_ansatz(u: float, v: float, w: float, N: float) -> tuple[float, float, float]:
    """(I, a, b) from estimates at N, N/2, N/4 under ``I + a/N + b/N**2``."""
    x = 1.0 / N
    info = (8.0 * u - 6.0 * v + w) / 3.0
    b = (w - 3.0 * v + 2.0 * u) / (6.0 * x * x)
    a = (v - u - 3.0 * b * x * x) / x
    return info, a, b


def _chunk_bounds(n: int, parts: int):
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return list(zip(edges[:-1], edges[1:]))


def corrected_mutual_information(bits, m: int, backend=None) -> MIEstimate:
    arr = _as_bits(bits)
    n = arr.size
    _require(n, m, 6)
    u = _segment_mi(arr, m, 0, n, backend)
    v = float(np.mean([_segment_mi(arr, m, a, b, backend) for a, b in _chunk_bounds(n, 2)]))
    w = float(np.mean([_segment_mi(arr, m, a, b, backend) for a, b in _chunk_bounds(n, 4)]))
    info, a_hat, b_hat = solve_bias_ansatz(u, v, w, n)
    return MIEstimate(m, n, u, info, a_hat, b_hat, v, w)


# ---------------------------------------------------------------- surrogates


def surrogate_bits(bits, index: int, seed: int, method: str = "bernoulli") -> np.ndarray:
    """The ``index``-th memoryless surrogate of ``bits`` (deterministic)."""
    arr = _as_bits(bits)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))
    if method == "bernoulli":
        p1 = float(arr.mean()) if arr.size else 0.0
        return (rng.random(arr.size) < p1).astype(np.uint8)
    if method == "permutation":
        return rng.permutation(arr)
    raise ValueError(f"unknown surrogate method {method!r}")


@dataclass(frozen=True)
class NullDistribution:
    m: int
    data_value: float
    samples: tuple

    @property
    def count(self) -> int:
        return len(self.samples)

    @property
    def rank(self) -> int:
        """Number of surrogates strictly below the data."""
        return int(np.sum(np.asarray(self.samples) < self.data_value))

    @property
    def p_value(self) -> float:
        exceed = int(np.sum(np.asarray(self.samples) >= self.data_value))
        return (1 + exceed) / (self.count + 1)

    @property
    def z_score(self) -> float:
        s = np.asarray(self.samples)
        sd = s.std(ddof=1) if s.size > 1 else 0.0
        if sd == 0:
            return math.inf if self.data_value > s.mean() else 0.0
        return float((self.data_value - s.mean()) / sd)

    def significant(self, z_crit: float = DEFAULT_Z_CRIT) -> bool:
        """Above every surrogate and ``z_crit`` null standard deviations out."""
        return self.rank == self.count and self.z_score >= z_crit

    def to_dict(self, z_crit: float = DEFAULT_Z_CRIT) -> dict:
        return {
            "m": self.m,
            "data_value": self.data_value,
            "samples": list(self.samples),
            "rank": self.rank,
            "count": self.count,
            "p_value": self.p_value,
            "z_score": self.z_score,
            "significant": self.significant(z_crit),
        }


def surrogate_null(bits, m: int, count: int = DEFAULT_SURROGATES, seed: int = 0,
                   method: str = "bernoulli", backend=None) -> NullDistribution:
    data = corrected_mutual_information(bits, m, backend).corrected_value
    samples = tuple(
        corrected_mutual_information(surrogate_bits(bits, k, seed, method), m, backend).corrected_value
        for k in range(count)
    )
    return NullDistribution(m, data, samples)


# ---------------------------------------------------------------- tables


def conditional_probability_table(bits, m: int, backend=None) -> list[dict]:
    """For each m-bit history (oldest bit first): count, p(x->1), excess over p(1)."""
    arr = _as_bits(bits)
    _require(arr.size, m, 4)
    joint = ngram_counts(arr, m + 1, 0, arr.size, backend=backend).reshape(-1, 2)
    p1 = float(arr.mean())
    rows = []
    for code in range(2**m):
        n0, n1 = int(joint[code, 0]), int(joint[code, 1])
        n = n0 + n1
        p = n1 / n if n else float("nan")
        sigma = math.sqrt(p1 * (1 - p1) / n) if n else float("nan")
        excess = p - p1
        rows.append({
            "history": format(code, f"0{m}b"),
            "count": n,
            "next_ones": n1,
            "p_next_one": p,
            "excess": excess,
            "z": excess / sigma if n and sigma > 0 else 0.0,
        })
    return rows


def poisson_variance_check(stream: TagStream, bin_width: float = 1.0, band=(0.8, 1.2)) -> dict:
    """Variance/mean of binned counts per channel (1 for a Poisson process)."""
    span = stream.span
    n_bins = int(span // bin_width)
    if n_bins < 100:
        raise InsufficientDataError(f"only {n_bins} bins of {bin_width} s; need >= 100")
    t = stream.times - (0.0 if stream.duration is not None else stream.times[0])
    out = {"bin_width": bin_width, "n_bins": n_bins, "band": list(band), "channels": {}}
    passed = True
    for c, name in enumerate(("blue", "red")):
        sel = t[stream.channels == c]
        counts = np.bincount((sel // bin_width).astype(np.int64), minlength=n_bins)[:n_bins]
        mean = counts.mean()
        fano = float(counts.var(ddof=1) / mean) if mean > 0 else float("nan")
        ok = bool(band[0] <= fano <= band[1]) if mean > 0 else True
        passed &= ok
        out["channels"][name] = {"mean": float(mean), "variance": float(counts.var(ddof=1)), "fano": fano, "pass": ok}
    out["pass"] = passed
    return out


# ---------------------------------------------------------------- report


def mi_report(bits, depths=DEFAULT_DEPTHS, count: int = DEFAULT_SURROGATES, seed: int = 0,
              method: str = "bernoulli", z_crit: float = DEFAULT_Z_CRIT, backend=None) -> dict:
    """Corrected MI for each depth with surrogate nulls; JSON-ready.

    Depths whose data requirement is not met are listed under ``skipped``.
    Each surrogate stream is drawn once and scored at every depth.
    """
    arr = _as_bits(bits)
    usable = [m for m in depths if arr.size >= 2 ** (m + 6)]
    if not usable:
        raise InsufficientDataError(f"{arr.size} bits is too few for any requested depth")
    estimates = {m: corrected_mutual_information(arr, m, backend) for m in usable}
    samples = {m: [] for m in usable}
    for k in range(count):
        sur = surrogate_bits(arr, k, seed, method)
        for m in usable:
            samples[m].append(corrected_mutual_information(sur, m, backend).corrected_value)
    nulls = {m: NullDistribution(m, estimates[m].corrected_value, tuple(samples[m])) for m in usable}
    tables = {m: conditional_probability_table(arr, m, backend) for m in usable}
    worst = max(
        ({"m": m, **row} for m in usable for row in tables[m] if row["count"]),
        key=lambda r: r["z"],
    )
    best_m = max(usable, key=lambda m: estimates[m].corrected_value)
    return {
        "n_bits": int(arr.size),
        "ones_fraction": float(arr.mean()),
        "depths": usable,
        "skipped": [m for m in depths if m not in usable],
        "surrogate_count": count,
        "surrogate_method": method,
        "seed": int(seed),
        "z_crit": z_crit,
        "estimates": {str(m): estimates[m].to_dict() for m in usable},
        "nulls": {str(m): nulls[m].to_dict(z_crit) for m in usable},
        "significant": {str(m): nulls[m].significant(z_crit) for m in usable},
        "any_significant": any(nulls[m].significant(z_crit) for m in usable),
        "max_info": estimates[best_m].corrected_value,
        "max_info_m": best_m,
        "conditional_tables": {str(m): tables[m] for m in usable},
        "worst_conditional_excess": worst,
    }

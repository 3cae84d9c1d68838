"""Delayed-choice quantum eraser with the environment basis set by ARNG bits.

In the linear (H/V) basis every signal/environment detector pairing has
probability 1/4. In the circular (L/R) basis matched pairings
(upper/upper, lower/lower) get ``(1 + sin phi)/4`` and crossed pairings
``(1 - sin phi)/4``. Either way the signal photon alone is 50/50.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import BitStream

LINEAR, CIRCULAR = "linear_HV", "circular_LR"
UPPER, LOWER = 0, 1
BASES = (LINEAR, CIRCULAR)


class BitExhaustionError(ValueError):
    pass


def coincidence_probability(basis: str, env_outcome: int, signal_outcome: int, phi: float) -> float:
    if not math.isfinite(phi):
        raise ValueError("phase must be finite")
    if env_outcome not in (UPPER, LOWER) or signal_outcome not in (UPPER, LOWER):
        raise ValueError("outcomes must be UPPER (0) or LOWER (1)")
    if basis == LINEAR:
        return 0.25
    if basis == CIRCULAR:
        sign = 1.0 if env_outcome == signal_outcome else -1.0
        return 0.25 * (1.0 + sign * math.sin(phi))
    raise ValueError(f"unknown basis {basis!r}")


def outcome_table(basis: str, phi: float) -> np.ndarray:
    """4-vector over (env, signal) = (U,U), (U,L), (L,U), (L,L)."""
    return np.array([coincidence_probability(basis, e, s, phi) for e in (UPPER, LOWER) for s in (UPPER, LOWER)])


@dataclass
class FringeReport:
    phases: list
    trials_per_phase: int
    # conditional[basis][env] -> P(signal upper | basis, env) per phase
    conditional: dict
    counts: dict
    signal_marginal: list
    signal_marginal_by_basis: dict
    visibility: dict

    def to_dict(self) -> dict:
        return {
            "phases": self.phases,
            "trials_per_phase": self.trials_per_phase,
            "conditional_signal_upper": self.conditional,
            "counts": self.counts,
            "signal_marginal_upper": self.signal_marginal,
            "signal_marginal_upper_by_basis": self.signal_marginal_by_basis,
            "visibility": self.visibility,
        }


def fit_visibility(phases, values) -> float:
    """Least-squares ``A + B sin(phi + delta)``; visibility (max-min)/(max+min)
    of the fitted curve with its extremes clipped to [0, 1]."""
    phases = np.asarray(phases, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    phases, values = phases[ok], values[ok]
    if phases.size < 3:
        return float("nan")
    design = np.column_stack([np.ones_like(phases), np.sin(phases), np.cos(phases)])
    (a, c1, c2), *_ = np.linalg.lstsq(design, values, rcond=None)
    amp = math.hypot(c1, c2)
    hi = min(a + amp, 1.0)
    lo = max(a - amp, 0.0)
    if hi + lo <= 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


def simulate_eraser(basis_bits: BitStream, phases, trials_per_phase: int, seed: int = 0,
                    trial_log: list | None = None) -> FringeReport:
    """Monte Carlo: one ARNG bit per trial picks the basis (0 linear, 1 circular).

    If ``trial_log`` is a list, (phase, basis bit, env, signal) tuples are appended.
    """
    phases = [float(p) for p in phases]
    needed = len(phases) * trials_per_phase
    bits = basis_bits.bits if isinstance(basis_bits, BitStream) else np.asarray(basis_bits, dtype=np.uint8)
    if bits.size < needed:
        raise BitExhaustionError(f"need {needed} basis bits, have {bits.size}")
    rng = np.random.default_rng(seed)
    conditional = {b: {"upper": [], "lower": []} for b in BASES}
    counts = {b: {"upper": [], "lower": []} for b in BASES}
    marginal, marginal_by_basis = [], {b: [] for b in BASES}
    for i, phi in enumerate(phases):
        chunk = bits[i * trials_per_phase:(i + 1) * trials_per_phase]
        outcome = np.empty(trials_per_phase, dtype=np.int64)
        u = rng.random(trials_per_phase)
        for bit, basis in ((0, LINEAR), (1, CIRCULAR)):
            sel = chunk == bit
            cdf = np.cumsum(outcome_table(basis, phi))
            outcome[sel] = np.minimum(np.searchsorted(cdf, u[sel], side="right"), 3)
        env = outcome // 2
        sig = outcome % 2
        if trial_log is not None:
            trial_log.extend(zip([phi] * trials_per_phase, chunk.tolist(), env.tolist(), sig.tolist()))
        marginal.append(float(np.mean(sig == UPPER)))
        for bit, basis in ((0, LINEAR), (1, CIRCULAR)):
            in_basis = chunk == bit
            marginal_by_basis[basis].append(float(np.mean(sig[in_basis] == UPPER)) if in_basis.any() else float("nan"))
            for e, ename in ((UPPER, "upper"), (LOWER, "lower")):
                sel = in_basis & (env == e)
                n = int(sel.sum())
                counts[basis][ename].append(n)
                conditional[basis][ename].append(float(np.mean(sig[sel] == UPPER)) if n else float("nan"))
    visibility = {
        b: {e: fit_visibility(phases, conditional[b][e]) for e in ("upper", "lower")} for b in BASES
    }
    return FringeReport(phases, trials_per_phase, conditional, counts, marginal, marginal_by_basis, visibility)

"""Valid-setting budget for Bell tests driven by two-colour photon RNGs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .spectral import CrosstalkFractions

# q_joint threshold for S_QM = 2*sqrt(2) to beat the relaxed bound 4 - 2q
JOINT_THRESHOLD = 2.0 - math.sqrt(2.0)
# q_alice + q_bob threshold
SUM_THRESHOLD = 3.0 - math.sqrt(2.0)


class InconsistentRatesError(ValueError):
    """Observed rates, noise and crosstalk cannot describe a physical arm."""


@dataclass(frozen=True)
class ArmObservation:
    observed_rate: float
    noise_rate: float

    def __post_init__(self):
        if not self.observed_rate > 0:
            raise ValueError("observed_rate must be positive")
        if not 0 <= self.noise_rate <= self.observed_rate:
            raise ValueError("noise_rate must lie in [0, observed_rate]")


@dataclass(frozen=True)
class DetectorObservation:
    blue: ArmObservation
    red: ArmObservation
    crosstalk: CrosstalkFractions

    @classmethod
    def from_rates(cls, r_blue, r_red, n_blue, n_red, f_b_to_r, f_r_to_b=None):
        f_r_to_b = f_b_to_r if f_r_to_b is None else f_r_to_b
        return cls(
            ArmObservation(r_blue, n_blue),
            ArmObservation(r_red, n_red),
            CrosstalkFractions(f_b_to_r, f_r_to_b),
        )


@dataclass(frozen=True)
class ValidityBudget:
    p_blue: float
    p_red: float
    s_blue: float
    s_red: float

    @property
    def p_detector(self) -> float:
        return max(self.p_blue, self.p_red)

    @property
    def q_detector(self) -> float:
        return 1.0 - self.p_detector

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(p_detector=self.p_detector, q_detector=self.q_detector)
        return d


@dataclass(frozen=True)
class BellBudget:
    q_alice: float
    q_bob: float
    q_joint: float
    s_bound: float
    passes_threshold: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(joint_threshold=JOINT_THRESHOLD, sum_threshold=SUM_THRESHOLD)
        return d


def mixing_matrix(crosstalk: CrosstalkFractions) -> np.ndarray:
    """Maps true (blue, red) fluxes to their detected contribution per arm."""
    fbr, frb = crosstalk.f_b_to_r, crosstalk.f_r_to_b
    return np.array([[1.0 - fbr, frb], [fbr, 1.0 - frb]])


def mix_rates(s_blue, s_red, n_blue, n_red, crosstalk: CrosstalkFractions) -> tuple[float, float]:
    """Forward model: observed (r_blue, r_red) from true fluxes and noise."""
    rb, rr = mixing_matrix(crosstalk) @ np.array([s_blue, s_red], dtype=float)
    return float(rb + n_blue), float(rr + n_red)


def unmix_rates(det: DetectorObservation) -> tuple[float, float]:
    """Recover the true astronomical fluxes (s_blue, s_red) behind an observation.

    Raises
    ------
    InconsistentRatesError
        If the mixing matrix is singular or a recovered flux is negative.
    """
    fbr, frb = det.crosstalk.f_b_to_r, det.crosstalk.f_r_to_b
    det_m = 1.0 - fbr - frb
    if abs(det_m) < 1e-15:
        raise InconsistentRatesError("singular mixing matrix (f_b_to_r + f_r_to_b = 1)")
    yb = det.blue.observed_rate - det.blue.noise_rate
    yr = det.red.observed_rate - det.red.noise_rate
    s_blue = ((1.0 - frb) * yb - frb * yr) / det_m
    s_red = ((1.0 - fbr) * yr - fbr * yb) / det_m
    # roundoff-level negatives are zero flux; anything larger is inconsistent
    tol = 1e-9 * max(det.blue.observed_rate, det.red.observed_rate)
    if -tol <= s_blue < 0:
        s_blue = 0.0
    if -tol <= s_red < 0:
        s_red = 0.0
    if s_blue < 0 or s_red < 0:
        raise InconsistentRatesError(
            f"negative unmixed flux (s_blue={s_blue:.6g}, s_red={s_red:.6g}); check noise estimates"
        )
    return float(s_blue), float(s_red)


def corruption_probability(det: DetectorObservation, fluxes=None) -> ValidityBudget:
    """Per-arm probability that a detection did not originate as that colour.

    ``p_j = n_j / r_j + s_j' f_{j'->j} / r_j``; the detector's invalid
    fraction is the larger of its two arms.
    """
    s_blue, s_red = unmix_rates(det) if fluxes is None else fluxes
    fbr, frb = det.crosstalk.f_b_to_r, det.crosstalk.f_r_to_b
    p_blue = (det.blue.noise_rate + s_red * frb) / det.blue.observed_rate
    p_red = (det.red.noise_rate + s_blue * fbr) / det.red.observed_rate
    for name, p in (("blue", p_blue), ("red", p_red)):
        if p > 1.0 + 1e-12:
            raise InconsistentRatesError(f"{name} corruption probability {p:.6g} exceeds 1")
    return ValidityBudget(float(p_blue), float(p_red), float(s_blue), float(s_red))


def bell_budget(q_alice: float, q_bob: float) -> BellBudget:
    for name, q in (("q_alice", q_alice), ("q_bob", q_bob)):
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"{name}={q} outside [0, 1]")
    q_joint = max(0.0, q_alice + q_bob - 1.0)
    return BellBudget(
        q_alice=float(q_alice),
        q_bob=float(q_bob),
        q_joint=q_joint,
        s_bound=4.0 - 2.0 * q_joint,
        passes_threshold=bool(q_joint >= JOINT_THRESHOLD),
    )


@dataclass(frozen=True)
class CHSHResult:
    S: float
    E: dict

    def to_dict(self) -> dict:
        return {"S": self.S, "E": {f"{k}{l}": v for (k, l), v in self.E.items()}}


def chsh_from_coincidences(counts: Mapping) -> CHSHResult:
    """CHSH value from agreement tallies.

    ``counts`` maps each joint setting ``(k, l)`` with ``k, l in {1, 2}`` to a
    pair ``(n_same, n_diff)`` of runs with ``A == B`` and ``A != B``.
    """
    E = {}
    for k in (1, 2):
        for l in (1, 2):
            try:
                same, diff = counts[(k, l)]
            except KeyError:
                raise ValueError(f"missing setting ({k}, {l})") from None
            total = same + diff
            if total <= 0:
                raise ValueError(f"no counts for setting ({k}, {l})")
            E[(k, l)] = 2.0 * same / total - 1.0
    S = abs(E[(1, 1)] + E[(1, 2)] + E[(2, 1)] - E[(2, 2)])
    return CHSHResult(float(S), E)


def validity_report(det: DetectorObservation) -> dict:
    """JSON-ready budget with every intermediate quantity."""
    budget = corruption_probability(det)
    return {
        "inputs": {
            "r_blue": det.blue.observed_rate,
            "r_red": det.red.observed_rate,
            "n_blue": det.blue.noise_rate,
            "n_red": det.red.noise_rate,
            "f_b_to_r": det.crosstalk.f_b_to_r,
            "f_r_to_b": det.crosstalk.f_r_to_b,
        },
        "unmixed": {"s_blue": budget.s_blue, "s_red": budget.s_red},
        "budget": budget.to_dict(),
        "thresholds": {
            "symmetric_q": SUM_THRESHOLD / 2.0,
            "sum_q": SUM_THRESHOLD,
            "joint_q": JOINT_THRESHOLD,
        },
    }

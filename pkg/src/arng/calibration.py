"""Magnitude to count-rate calibration: ``log10(rate) = a + b * m_V``."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

CATALOG_FIELDS = ("name", "m_V", "B", "z", "blue_cps", "red_cps", "bg_blue", "bg_red", "airmass")


@dataclass(frozen=True)
class SourceObservation:
    name: str
    v_magnitude: float
    blue_rate: float
    red_rate: float
    background_blue: float = 0.0
    background_red: float = 0.0
    b_magnitude: float | None = None
    redshift: float | None = None
    airmass: float | None = None
    extra: tuple = ()

    def __post_init__(self):
        if not math.isfinite(self.v_magnitude):
            raise ValueError(f"{self.name}: V magnitude must be finite")
        for f in ("blue_rate", "red_rate", "background_blue", "background_red"):
            if getattr(self, f) < 0:
                raise ValueError(f"{self.name}: {f} must be non-negative")

    @property
    def net_rate(self) -> float:
        return self.blue_rate + self.red_rate - self.background_blue - self.background_red


@dataclass(frozen=True)
class RateFit:
    intercept: float
    slope: float
    intercept_err: float
    slope_err: float
    n_points: int
    residual_rms: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def fit_magnitude_rate(observations, collecting_area: float = 1.0) -> RateFit:
    """Unweighted least squares of log10(background-subtracted rate per m^2) on m_V.

    Observations with non-positive net rate are dropped with a warning.
    """
    mags, logs = [], []
    for obs in observations:
        net = obs.net_rate
        if net <= 0:
            log.warning("dropping %s: non-positive net rate %.3g", obs.name, net)
            continue
        mags.append(obs.v_magnitude)
        logs.append(math.log10(net / collecting_area))
    if len(mags) < 3:
        raise ValueError(f"need at least 3 usable observations, got {len(mags)}")
    x = np.asarray(mags)
    y = np.asarray(logs)
    A = np.column_stack([np.ones_like(x), x])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < 2:
        raise ValueError("magnitudes are all identical; slope undetermined")
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return RateFit(
        intercept=float(coef[0]),
        slope=float(coef[1]),
        intercept_err=float(math.sqrt(max(cov[0, 0], 0.0))),
        slope_err=float(math.sqrt(max(cov[1, 1], 0.0))),
        n_points=len(x),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def predict_rate(fit: RateFit, v_magnitude) -> float | np.ndarray:
    """Count rate per m^2 at the given V magnitude(s)."""
    return 10.0 ** (fit.intercept + fit.slope * np.asarray(v_magnitude, dtype=float))


# ---------------------------------------------------------------- catalog


def _opt_float(text):
    text = (text or "").strip()
    if text == "" or text.lower() in ("unknown", "nan", "-"):
        return None
    return float(text)


def read_catalog(path) -> list[SourceObservation]:
    """Comma-delimited catalogue with a header naming at least CATALOG_FIELDS.

    Extra columns are kept on each observation as ``extra`` (name, text) pairs.
    """
    text = Path(path).read_text()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(rows, skipinitialspace=True)
    missing = [f for f in CATALOG_FIELDS if f not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"{path}: catalog missing columns {missing}")
    out = []
    for row in reader:
        out.append(
            SourceObservation(
                name=row["name"].strip(),
                v_magnitude=float(row["m_V"]),
                b_magnitude=_opt_float(row["B"]),
                redshift=_opt_float(row["z"]),
                blue_rate=float(row["blue_cps"]),
                red_rate=float(row["red_cps"]),
                background_blue=float(row["bg_blue"]),
                background_red=float(row["bg_red"]),
                airmass=_opt_float(row["airmass"]),
                extra=tuple((k, v.strip()) for k, v in row.items() if k not in CATALOG_FIELDS and v is not None),
            )
        )
    return out


def quasar_catalog() -> list[SourceObservation]:
    """The twelve observed quasars with zenith background rates."""
    return read_catalog(Path(str(resources.files("arng") / "data" / "quasars.csv")))

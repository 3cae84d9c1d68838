"""Source spectra, atmosphere and instrument response; crosstalk integrals.

All curves are tabulated on a :class:`WavelengthGrid` (nm) and treated as
piecewise linear between samples. Integrals use the trapezoidal rule, which
is exact for that interpretation, including partial intervals cut at the
colour boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

# hc/k in nm*K
_HC_OVER_K = 1.438776877e7

DEFAULT_CUTOFF_NM = 700.0
SHORTPASS_EDGE_NM = 697.0
LONGPASS_EDGE_NM = 705.0
DICHROIC_WIDTH_NM = 5.0
DICHROIC_LEAKAGE = 1e-3
RAYLEIGH_TAU0 = 0.1
RAYLEIGH_REF_NM = 550.0


class GridMismatchError(ValueError):
    pass


def _frozen(values, name) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    wavelengths: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.wavelengths, "wavelengths")
        if lam.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("wavelengths must be finite and positive")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        object.__setattr__(self, "wavelengths", lam)

    @classmethod
    def uniform(cls, start=300.0, stop=1200.0, step=0.5) -> "WavelengthGrid":
        n = int(round((stop - start) / step)) + 1
        return cls(np.linspace(start, stop, n))

    def __len__(self):
        return self.wavelengths.size

    def same_as(self, other: "WavelengthGrid") -> bool:
        return self is other or np.array_equal(self.wavelengths, other.wavelengths)

    def refine(self, factor: int = 2) -> "WavelengthGrid":
        lam = self.wavelengths
        pieces = [np.linspace(a, b, factor, endpoint=False) for a, b in zip(lam[:-1], lam[1:])]
        return WavelengthGrid(np.concatenate(pieces + [lam[-1:]]))


def _check_curve(grid: WavelengthGrid, values, name, lo=0.0, hi=None) -> np.ndarray:
    arr = _frozen(values, name)
    if arr.size != len(grid):
        raise GridMismatchError(f"{name} has {arr.size} samples, grid has {len(grid)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < lo) or (hi is not None and np.any(arr > hi)):
        bounds = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ValueError(f"{name} must lie in {bounds}")
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Photon number per unit wavelength per unit time, arbitrary scale."""

    grid: WavelengthGrid
    density: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "density", _check_curve(self.grid, self.density, "density"))

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths

    def total(self) -> float:
        return float(np.trapezoid(self.density, self.wavelengths))

    def resample(self, grid: WavelengthGrid) -> "Spectrum":
        return Spectrum(grid, _interp(grid.wavelengths, self.wavelengths, self.density))


@dataclass(frozen=True, eq=False)
class AtmosphereModel:
    grid: WavelengthGrid
    zenith_transmission: np.ndarray
    rayleigh_optical_depth: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self,
            "zenith_transmission",
            _check_curve(self.grid, self.zenith_transmission, "zenith_transmission", 0.0, 1.0),
        )
        object.__setattr__(
            self,
            "rayleigh_optical_depth",
            _check_curve(self.grid, self.rayleigh_optical_depth, "rayleigh_optical_depth"),
        )


@dataclass(frozen=True, eq=False)
class InstrumentResponse:
    """Per-wavelength optical chain of one two-arm colour sorter."""

    grid: WavelengthGrid
    lens_transmission: np.ndarray
    detector_efficiency: np.ndarray
    blue_path: np.ndarray
    red_path: np.ndarray
    cutoff: float = DEFAULT_CUTOFF_NM

    def __post_init__(self):
        for name in ("lens_transmission", "detector_efficiency", "blue_path", "red_path"):
            object.__setattr__(self, name, _check_curve(self.grid, getattr(self, name), name, 0.0, 1.0))
        if np.any(self.blue_path + self.red_path > 1.0 + 1e-12):
            raise ValueError("blue_path + red_path exceeds 1")
        lam = self.grid.wavelengths
        if not lam[0] <= self.cutoff <= lam[-1]:
            raise ValueError(f"cutoff {self.cutoff} nm outside grid [{lam[0]}, {lam[-1]}]")


@dataclass(frozen=True)
class CrosstalkFractions:
    f_b_to_r: float
    f_r_to_b: float

    def __post_init__(self):
        for name in ("f_b_to_r", "f_r_to_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


# ---------------------------------------------------------------- sources


def blackbody_spectrum(temperature: float, grid: WavelengthGrid) -> Spectrum:
    """Planck photon-count spectrum, peak-normalised to 1.

    Photon number per wavelength goes as ``lam**-4 / (exp(hc/(lam k T)) - 1)``,
    i.e. the energy radiance divided by ``hc/lam``.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    lam = grid.wavelengths
    x = _HC_OVER_K / (lam * temperature)
    with np.errstate(over="ignore"):
        density = lam**-4.0 / np.expm1(x)
    density = np.nan_to_num(density, nan=0.0, posinf=0.0)
    peak = density.max()
    if peak > 0:
        density = density / peak
    return Spectrum(grid, density)


def redshift_spectrum(spectrum: Spectrum, z: float, grid: WavelengthGrid | None = None) -> Spectrum:
    """Move every rest wavelength to ``lam*(1+z)`` and re-tabulate.

    Linear interpolation onto ``grid`` (default: the input grid); samples
    outside the shifted support get zero density.
    """
    if not z >= 0:
        raise ValueError("redshift must be non-negative")
    grid = spectrum.grid if grid is None else grid
    shifted = spectrum.wavelengths * (1.0 + z)
    return Spectrum(grid, _interp(grid.wavelengths, shifted, spectrum.density))


def attenuate(spectrum: Spectrum, atmosphere: AtmosphereModel, airmass: float) -> Spectrum:
    """``N_in = N_source * rho_atm * exp(-X tau)`` pointwise."""
    if not (airmass >= 1.0 or airmass == 0.0):
        raise ValueError("airmass must be >= 1 (or exactly 0 for no atmosphere)")
    if not spectrum.grid.same_as(atmosphere.grid):
        raise GridMismatchError("spectrum and atmosphere grids differ")
    factor = atmosphere.zenith_transmission * np.exp(-airmass * atmosphere.rayleigh_optical_depth)
    return Spectrum(spectrum.grid, spectrum.density * factor)


# ---------------------------------------------------------------- instrument


def arm_spectral_response(resp: InstrumentResponse) -> tuple[np.ndarray, np.ndarray]:
    """(rho_blue, rho_red): path probability x lens^2 x detector efficiency."""
    common = resp.lens_transmission**2 * resp.detector_efficiency
    return resp.blue_path * common, resp.red_path * common


def crosstalk_fractions(n_in: Spectrum, resp: InstrumentResponse) -> CrosstalkFractions:
    """Wrong-way fractions for photons reaching the pinhole with spectrum ``n_in``.

    ``f_b_to_r`` is the share of red-arm photons bluer than the cutoff;
    ``f_r_to_b`` the share of blue-arm photons redder than it.
    """
    if not n_in.grid.same_as(resp.grid):
        raise GridMismatchError("spectrum and instrument grids differ")
    lam = resp.grid.wavelengths
    into_red = n_in.density * resp.red_path
    into_blue = n_in.density * resp.blue_path
    red_total = integrate(lam, into_red)
    blue_total = integrate(lam, into_blue)
    if red_total <= 0 or blue_total <= 0:
        raise ZeroDivisionError("no flux reaches one of the arms; crosstalk undefined")
    f_br = integrate(lam, into_red, hi=resp.cutoff) / red_total
    f_rb = integrate(lam, into_blue, lo=resp.cutoff) / blue_total
    return CrosstalkFractions(float(np.clip(f_br, 0, 1)), float(np.clip(f_rb, 0, 1)))


def expected_arm_rates(n_in: Spectrum, resp: InstrumentResponse, scale: float) -> tuple[float, float]:
    """Detected rates ``scale * integral(rho_j * N_in)`` for blue and red."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    if not n_in.grid.same_as(resp.grid):
        raise GridMismatchError("spectrum and instrument grids differ")
    rho_b, rho_r = arm_spectral_response(resp)
    lam = resp.grid.wavelengths
    return scale * integrate(lam, rho_b * n_in.density), scale * integrate(lam, rho_r * n_in.density)


def integrate(x, y, lo=None, hi=None) -> float:
    """Trapezoidal integral of piecewise-linear ``y(x)`` over ``[lo, hi]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = x[0] if lo is None else max(lo, x[0])
    hi = x[-1] if hi is None else min(hi, x[-1])
    if hi <= lo:
        return 0.0
    inside = (x > lo) & (x < hi)
    xs = np.concatenate(([lo], x[inside], [hi]))
    ys = np.concatenate(([np.interp(lo, x, y)], y[inside], [np.interp(hi, x, y)]))
    return float(np.trapezoid(ys, xs))


# ---------------------------------------------------------------- bundled models


def logistic_shortpass(lam, edge, width=DICHROIC_WIDTH_NM, leakage=DICHROIC_LEAKAGE):
    """Transmission falling from ``1-leakage`` to ``leakage`` across ``edge``."""
    lam = np.asarray(lam, dtype=float)
    return leakage + (1.0 - 2.0 * leakage) * _expit(-(lam - edge) / width)


def logistic_longpass(lam, edge, width=DICHROIC_WIDTH_NM, leakage=DICHROIC_LEAKAGE):
    lam = np.asarray(lam, dtype=float)
    return leakage + (1.0 - 2.0 * leakage) * _expit((lam - edge) / width)


def two_dichroic_paths(lam, shortpass_edge=SHORTPASS_EDGE_NM, longpass_edge=LONGPASS_EDGE_NM,
                       width=DICHROIC_WIDTH_NM, leakage=DICHROIC_LEAKAGE):
    """Blue/red path probabilities with the short-pass dichroic first.

    Light transmitted by the short-pass goes to the blue arm; the reflected
    part must also pass the long-pass to reach the red arm.
    """
    sp = logistic_shortpass(lam, shortpass_edge, width, leakage)
    lp = logistic_longpass(lam, longpass_edge, width, leakage)
    return sp, (1.0 - sp) * lp


def rayleigh_optical_depth(lam, tau0=RAYLEIGH_TAU0, ref=RAYLEIGH_REF_NM):
    return tau0 * (ref / np.asarray(lam, dtype=float)) ** 4


def default_lens_transmission(lam):
    # AR-coated achromat: flat ~0.97 with a UV roll-off
    lam = np.asarray(lam, dtype=float)
    return np.clip(0.97 - 0.5 * np.exp(-(lam - 300.0) / 25.0), 0.0, 1.0)


def default_detector_efficiency(lam):
    # silicon APD: broad peak near 800 nm
    lam = np.asarray(lam, dtype=float)
    return 0.8 * np.exp(-(((lam - 800.0) / 300.0) ** 2))


def default_instrument(grid: WavelengthGrid, cutoff=DEFAULT_CUTOFF_NM) -> InstrumentResponse:
    lam = grid.wavelengths
    blue, red = two_dichroic_paths(lam)
    return InstrumentResponse(
        grid=grid,
        lens_transmission=default_lens_transmission(lam),
        detector_efficiency=default_detector_efficiency(lam),
        blue_path=blue,
        red_path=red,
        cutoff=cutoff,
    )


def default_atmosphere(grid: WavelengthGrid) -> AtmosphereModel:
    lam_t, trans = read_table(_data_path("atmosphere_zenith.txt"))
    zenith = np.clip(np.interp(grid.wavelengths, lam_t, trans, left=0.0, right=0.0), 0.0, 1.0)
    return AtmosphereModel(grid, zenith, rayleigh_optical_depth(grid.wavelengths))


def composite_quasar_spectrum() -> Spectrum:
    """Rest-frame stand-in composite quasar spectrum (photon number)."""
    lam, dens = read_table(_data_path("quasar_composite.txt"))
    return Spectrum(WavelengthGrid(lam), dens)


def load_spectrum(path, grid: WavelengthGrid | None = None) -> Spectrum:
    lam, val = read_table(path)
    spec = Spectrum(WavelengthGrid(lam), val)
    return spec if grid is None else spec.resample(grid)


def load_curve(path, grid: WavelengthGrid) -> np.ndarray:
    """Read a two-column curve and interpolate it onto ``grid`` (0 outside)."""
    lam, val = read_table(path)
    return _interp(grid.wavelengths, lam, val)


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column (wavelength_nm, value) text table; '#' comments, optional header."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            a, b = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            if not rows:
                continue  # header line
            raise ValueError(f"{path}:{lineno}: expected two numeric columns")
        rows.append((a, b))
    if len(rows) < 2:
        raise ValueError(f"{path}: fewer than 2 data rows")
    arr = np.array(rows)
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ValueError(f"{path}: wavelengths must be strictly increasing")
    return arr[:, 0], arr[:, 1]


def _data_path(name: str) -> Path:
    return Path(str(resources.files("arng") / "data" / name))


def _interp(x_new, x, y):
    return np.interp(x_new, x, y, left=0.0, right=0.0)


def _expit(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))

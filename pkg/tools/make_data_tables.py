"""Regenerate the bundled stand-in tables in src/arng/data/.

Both tables are coarse analytic stand-ins, not measurements:

* quasar_composite.txt: rest-frame photon-number density of a piecewise
  power-law quasar continuum (f_nu ~ nu^-0.44 blueward of 500 nm,
  nu^-2.45 redward) with Gaussian emission bumps and Lyman-forest
  suppression.
* atmosphere_zenith.txt: zenith transmission of a clear mountain site
  with O2/H2O absorption notches.
"""

from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "arng" / "data"

# (rest wavelength nm, peak height relative to continuum, sigma nm)
LINES = [
    (121.6, 6.0, 2.0),   # Lyman-alpha
    (154.9, 1.6, 2.5),   # C IV
    (190.9, 0.6, 2.5),   # C III]
    (279.8, 0.5, 3.0),   # Mg II
    (486.1, 0.4, 3.0),   # H-beta
    (656.3, 1.2, 3.0),   # H-alpha
]

# (centre nm, fractional depth, sigma nm)
NOTCHES = [
    (687.0, 0.30, 2.0),
    (720.0, 0.20, 8.0),
    (760.5, 0.60, 3.0),
    (820.0, 0.25, 10.0),
    (940.0, 0.60, 20.0),
    (1135.0, 0.50, 15.0),
]


def quasar():
    lam = np.arange(60.0, 1200.0 + 0.25, 0.5)
    flam = np.where(lam < 500.0, (lam / 500.0) ** -1.56, (lam / 500.0) ** 0.45)
    for centre, height, sigma in LINES:
        flam = flam * (1.0 + height * np.exp(-0.5 * ((lam - centre) / sigma) ** 2))
    flam = np.where(lam < 116.0, flam * 0.6, flam)  # forest, blueward of the line wing
    flam = np.where(lam < 91.2, flam * 0.1, flam)
    photons = lam * flam
    return lam, photons / photons.max()


def atmosphere():
    lam = np.arange(300.0, 1200.0 + 0.25, 0.5)
    x = 550.0 / lam
    trans = 0.92 * np.exp(-0.07 * x**4 - 0.03 * x)
    for centre, depth, sigma in NOTCHES:
        trans = trans * (1.0 - depth * np.exp(-0.5 * ((lam - centre) / sigma) ** 2))
    trans = np.where(lam < 320.0, trans * np.clip((lam - 300.0) / 20.0, 0.0, 1.0), trans)
    return lam, np.clip(trans, 0.0, 1.0)


def write(name, header, lam, val):
    lines = [f"# {h}" for h in header] + [f"{a:.1f} {b:.6e}" for a, b in zip(lam, val)]
    (DATA / name).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    write(
        "quasar_composite.txt",
        ["stand-in composite quasar spectrum, rest frame",
         "wavelength_nm photon_number_density (arbitrary units, peak = 1)"],
        *quasar(),
    )
    write(
        "atmosphere_zenith.txt",
        ["stand-in zenith atmospheric transmission",
         "wavelength_nm transmission"],
        *atmosphere(),
    )

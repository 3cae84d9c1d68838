"""Scenario configuration files.

INI-style text (``configparser``), one section per concern. Durations carry
their unit in the key name. Example::

    [scenario]
    duration_s = 500
    seed = 1

    [rates]               ; Hz, all six required
    s_blue = 607.5
    s_red = 1745.8
    skyglow_blue = 20
    skyglow_red = 60
    dark_blue = 41
    dark_red = 93

    [crosstalk]           ; optional, default 0; or derive from [spectrum]
    f_b_to_r = 0.002
    f_r_to_b = 0.002

    [detector]            ; optional, these are the defaults
    dead_time_ns = 420
    jitter_ps = 300
    clock_tick_ps = 80.955
    cutoff_nm = 700

    [spectrum]            ; optional: compute crosstalk from the spectral model
    source = quasar       ; or blackbody
    redshift = 1.083
    temperature_k = 5778
    airmass = 1.1

    [scintillation]       ; optional
    modulation_depth = 0.5
    correlation_time_ms = 5
    arm_coupling_mismatch = 0.5
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .simulate import ScenarioConfig, ScintillationConfig
from .spectral import CrosstalkFractions

RATE_FIELDS = ("s_blue", "s_red", "skyglow_blue", "skyglow_red", "dark_blue", "dark_red")

DETECTOR_DEFAULTS = {
    "dead_time_ns": 420.0,
    "jitter_ps": 300.0,
    "clock_tick_ps": 80.955,
    "cutoff_nm": 700.0,
}


class ConfigError(ValueError):
    """Invalid or incomplete configuration; message names the offending field."""


def _float(section, key, default=None, required=False):
    name = f"{section.name}.{key}"
    if key not in section:
        if required:
            raise ConfigError(f"missing field {name}")
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"field {name}: {section[key]!r} is not a number") from None


def parse_config_text(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    for sec in ("scenario", "rates"):
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")
    scen = cp["scenario"]
    duration = _float(scen, "duration_s", required=True)
    seed_text = scen.get("seed", "0")
    try:
        seed = int(seed_text, 0)
    except ValueError:
        raise ConfigError(f"field scenario.seed: {seed_text!r} is not an integer") from None
    rates = {k: _float(cp["rates"], k, required=True) for k in RATE_FIELDS}

    det = cp["detector"] if "detector" in cp else cp[cp.default_section]
    detector = {k: _float(det, k, v) for k, v in DETECTOR_DEFAULTS.items()}

    if "crosstalk" in cp:
        xt = cp["crosstalk"]
        f_br = _float(xt, "f_b_to_r", required=True)
        crosstalk = (f_br, _float(xt, "f_r_to_b", f_br))
    elif "spectrum" in cp:
        crosstalk = _crosstalk_from_spectrum(cp["spectrum"], detector["cutoff_nm"])
    else:
        crosstalk = (0.0, 0.0)

    scint = None
    if "scintillation" in cp:
        sc = cp["scintillation"]
        scint = _build(ScintillationConfig, "scintillation",
                       modulation_depth=_float(sc, "modulation_depth", 0.5),
                       correlation_time=_float(sc, "correlation_time_ms", 5.0) * 1e-3,
                       arm_coupling_mismatch=_float(sc, "arm_coupling_mismatch", 0.5))

    return _build(
        ScenarioConfig, "scenario",
        duration=duration,
        seed=seed,
        crosstalk=_build(CrosstalkFractions, "crosstalk", *crosstalk),
        dead_time=detector["dead_time_ns"] * 1e-9,
        jitter_sigma=detector["jitter_ps"] * 1e-12,
        clock_tick=detector["clock_tick_ps"] * 1e-12,
        scintillation=scint,
        **rates,
    )


def _build(cls, where, *args, **kwargs):
    try:
        return cls(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def _crosstalk_from_spectrum(sec, cutoff):
    from . import spectral as sp

    grid = sp.WavelengthGrid.uniform()
    source = sec.get("source", "quasar").strip()
    if source == "quasar":
        spec = sp.redshift_spectrum(sp.composite_quasar_spectrum(), _float(sec, "redshift", 0.0), grid)
    elif source == "blackbody":
        spec = sp.blackbody_spectrum(_float(sec, "temperature_k", required=True), grid)
    else:
        raise ConfigError(f"field spectrum.source: unknown source {source!r}")
    n_in = sp.attenuate(spec, sp.default_atmosphere(grid), _float(sec, "airmass", 1.0))
    f = sp.crosstalk_fractions(n_in, sp.default_instrument(grid, cutoff))
    return f.f_b_to_r, f.f_r_to_b


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)

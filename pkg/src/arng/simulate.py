"""Seeded photon time-tag simulator for a two-arm colour sorter.

Pipeline: independent Poisson components per arm (astronomical, wrong-way,
skyglow, dark) -> optional scintillation modulation of the sky-photon
components -> per-channel non-paralyzable dead time -> Gaussian timing
jitter -> clock quantisation and re-sort.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from .kernels import greedy_gap_mask
from .spectral import CrosstalkFractions
from .stream import ASTRONOMICAL, BLUE, DARK, RED, SKYGLOW, WRONGWAY, TagStream

DEAD_TIME = 420e-9
JITTER_SIGMA = 300e-12
CLOCK_TICK = 80.955e-12


@dataclass(frozen=True)
class ScintillationConfig:
    """Multiplicative seeing-induced rate modulation.

    ``modulation_depth`` is the coefficient of variation of the per-arm rate
    multiplier; ``arm_coupling_mismatch`` decorrelates the two arms
    (0 = identical multipliers, 1 = independent).
    """

    modulation_depth: float = 0.5
    correlation_time: float = 5e-3
    arm_coupling_mismatch: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.modulation_depth < 1.0:
            raise ValueError("modulation_depth must lie in [0, 1)")
        if not self.correlation_time > 0:
            raise ValueError("correlation_time must be positive")
        if not 0.0 <= self.arm_coupling_mismatch <= 1.0:
            raise ValueError("arm_coupling_mismatch must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float
    s_blue: float = 0.0
    s_red: float = 0.0
    skyglow_blue: float = 0.0
    skyglow_red: float = 0.0
    dark_blue: float = 0.0
    dark_red: float = 0.0
    crosstalk: CrosstalkFractions = field(default_factory=lambda: CrosstalkFractions(0.0, 0.0))
    dead_time: float = DEAD_TIME
    jitter_sigma: float = JITTER_SIGMA
    clock_tick: float = CLOCK_TICK
    seed: int = 0
    scintillation: ScintillationConfig | None = None

    def __post_init__(self):
        for name in ("s_blue", "s_red", "skyglow_blue", "skyglow_red", "dark_blue", "dark_red"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a non-negative finite rate")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.dead_time >= 0:
            raise ValueError("dead_time must be non-negative")
        if not self.jitter_sigma >= 0:
            raise ValueError("jitter_sigma must be non-negative")
        if not self.clock_tick > 0:
            raise ValueError("clock_tick must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def clock_fs(self) -> int:
        return int(round(self.clock_tick * 1e15))

    def components(self):
        """(channel, origin, rate, sky-borne) for every Poisson component, in a fixed order."""
        f = self.crosstalk
        return [
            (BLUE, ASTRONOMICAL, self.s_blue * (1.0 - f.f_b_to_r), True),
            (RED, WRONGWAY, self.s_blue * f.f_b_to_r, True),
            (RED, ASTRONOMICAL, self.s_red * (1.0 - f.f_r_to_b), True),
            (BLUE, WRONGWAY, self.s_red * f.f_r_to_b, True),
            (BLUE, SKYGLOW, self.skyglow_blue, False),
            (RED, SKYGLOW, self.skyglow_red, False),
            (BLUE, DARK, self.dark_blue, False),
            (RED, DARK, self.dark_red, False),
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = int(self.seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if isinstance(d.get("crosstalk"), dict):
            d["crosstalk"] = CrosstalkFractions(**d["crosstalk"])
        if isinstance(d.get("scintillation"), dict):
            d["scintillation"] = ScintillationConfig(**d["scintillation"])
        return cls(**d)


class Modulation:
    """Piecewise-constant per-arm rate multipliers on a uniform time grid."""

    def __init__(self, dt: float, values: np.ndarray):
        self.dt = float(dt)
        self.values = values  # shape (2, n_cells), blue row then red row
        self.edges = np.arange(values.shape[1] + 1) * self.dt

    def __call__(self, t, channel: int):
        idx = np.clip((np.asarray(t) / self.dt).astype(np.int64), 0, self.values.shape[1] - 1)
        return self.values[channel, idx]

    def cumulative(self, channel: int) -> np.ndarray:
        """Integral of the multiplier from 0 to each cell edge."""
        return np.concatenate(([0.0], np.cumsum(self.values[channel]) * self.dt))


def scintillation_modulator(scint: ScintillationConfig, duration: float, rng: np.random.Generator) -> Modulation:
    """Mean-one log-normal Ornstein-Uhlenbeck multipliers for both arms.

    Both arms share an OU driver with correlation ``1 - mismatch``; the
    imperfect overlap gives the same-colour bursts seen with misaligned
    detector sweet spots.
    """
    dt = scint.correlation_time / 16.0
    n = max(1, int(math.ceil(duration / dt)))
    if scint.modulation_depth == 0.0:
        return Modulation(dt, np.ones((2, n)))
    a = math.exp(-dt / scint.correlation_time)
    g_blue = _ou(rng, n, a)
    g_other = _ou(rng, n, a)
    rho = 1.0 - scint.arm_coupling_mismatch
    g_red = rho * g_blue + math.sqrt(max(0.0, 1.0 - rho * rho)) * g_other
    sigma2 = math.log1p(scint.modulation_depth**2)
    sigma = math.sqrt(sigma2)
    values = np.exp(sigma * np.vstack([g_blue, g_red]) - 0.5 * sigma2)
    return Modulation(dt, values)


def _ou(rng, n, a):
    # unit-variance AR(1) started in its stationary distribution
    x = rng.standard_normal(n)
    x[1:] *= math.sqrt(1.0 - a * a)
    return lfilter([1.0], [1.0, -a], x)


def poisson_arrivals(rng: np.random.Generator, rate: float, duration: float) -> np.ndarray:
    """Sorted arrival times of a homogeneous Poisson process on [0, duration)."""
    if rate <= 0:
        return np.empty(0)
    expected = rate * duration
    chunks = []
    t0 = 0.0
    while True:
        n = int(expected - t0 * rate + 5.0 * math.sqrt(expected) + 16)
        t = t0 + np.cumsum(rng.exponential(1.0 / rate, size=n))
        if t[-1] >= duration:
            chunks.append(t[: np.searchsorted(t, duration)])
            break
        chunks.append(t)
        t0 = t[-1]
    return np.concatenate(chunks)


def modulated_arrivals(rng, rate, duration, modulation: Modulation, channel: int) -> np.ndarray:
    """Doubly-stochastic Poisson arrivals via time rescaling of a unit process."""
    if rate <= 0:
        return np.empty(0)
    cum = rate * modulation.cumulative(channel)
    edges = modulation.edges
    horizon = float(np.interp(duration, edges, cum))
    u = poisson_arrivals(rng, 1.0, horizon)
    return np.interp(u, cum, edges)


def simulate(config: ScenarioConfig, backend=None) -> TagStream:
    """Generate a labelled tag stream. Bit-identical for identical configs."""
    root = np.random.SeedSequence(int(config.seed))
    comps = config.components()
    seeds = root.spawn(len(comps) + 2)
    mod = None
    if config.scintillation is not None:
        mod = scintillation_modulator(config.scintillation, config.duration, np.random.default_rng(seeds[0]))

    times, chans, origins = [], [], []
    for (channel, origin, rate, sky), ss in zip(comps, seeds[1:-1]):
        rng = np.random.default_rng(ss)
        if sky and mod is not None:
            t = modulated_arrivals(rng, rate, config.duration, mod, channel)
        else:
            t = poisson_arrivals(rng, rate, config.duration)
        times.append(t)
        chans.append(np.full(t.size, channel, dtype=np.uint8))
        origins.append(np.full(t.size, origin, dtype=np.uint8))
    t = np.concatenate(times)
    ch = np.concatenate(chans)
    org = np.concatenate(origins)

    # detector stage: each arm loses photons arriving inside its dead time
    keep = np.zeros(t.size, dtype=bool)
    for channel in (BLUE, RED):
        idx = np.flatnonzero(ch == channel)
        idx = idx[np.argsort(t[idx], kind="stable")]
        keep[idx[greedy_gap_mask(t[idx], config.dead_time, strict=False, backend=backend)]] = True
    t, ch, org = t[keep], ch[keep], org[keep]

    rng = np.random.default_rng(seeds[-1])
    if config.jitter_sigma > 0:
        t = t + rng.normal(0.0, config.jitter_sigma, size=t.size)
    ticks = np.floor(np.maximum(t, 0.0) / config.clock_tick).astype(np.int64)
    order = np.lexsort((ch, ticks))
    return TagStream(
        ticks[order],
        ch[order],
        clock_fs=config.clock_fs,
        origins=org[order],
        duration=config.duration,
    )


def expected_corruption(config: ScenarioConfig) -> dict:
    """Ground-truth corrupt fraction per arm implied by the configured rates
    (dead-time losses ignored)."""
    out = {}
    for channel, name in ((BLUE, "blue"), (RED, "red")):
        total = bad = 0.0
        for c, origin, rate, _ in config.components():
            if c != channel:
                continue
            total += rate
            if origin != ASTRONOMICAL:
                bad += rate
        out[name] = bad / total if total > 0 else float("nan")
    return out


def empirical_corruption(stream: TagStream) -> dict:
    """Corrupt fraction per arm from ground-truth origin labels."""
    if stream.origins is None:
        raise ValueError("stream carries no origin labels")
    out = {}
    for channel, name in ((BLUE, "blue"), (RED, "red")):
        sel = stream.origins[stream.channels == channel]
        out[name] = float(np.mean(sel != ASTRONOMICAL)) if sel.size else float("nan")
    return out

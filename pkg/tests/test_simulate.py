import math

import numpy as np
import pytest
from scipy import stats

from arng import validity
from arng.simulate import (
    ScenarioConfig,
    ScintillationConfig,
    empirical_corruption,
    expected_corruption,
    poisson_arrivals,
    scintillation_modulator,
    simulate,
)
from arng.spectral import CrosstalkFractions
from arng.stream import ASTRONOMICAL, BLUE, RED, cross_channel_deadtime_filter


def dead_time_rate(true_rate, tau):
    """Non-paralyzable detector: observed = true / (1 + true * tau)."""
    return true_rate / (1.0 + true_rate * tau)


def test_zero_rates_give_empty_stream():
    s = simulate(ScenarioConfig(duration=10.0))
    assert len(s) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(duration=0.0)
    with pytest.raises(ValueError):
        ScenarioConfig(duration=1.0, dark_red=-1.0)
    with pytest.raises(ValueError):
        ScenarioConfig(duration=1.0, clock_tick=0.0)
    with pytest.raises(ValueError):
        ScintillationConfig(modulation_depth=1.0)


def test_dark_counts_are_poisson():
    cfg = ScenarioConfig(duration=500.0, dark_blue=41.0, dark_red=93.0, seed=7)
    s = simulate(cfg)
    c = s.counts()
    for name, expected in (("blue", 20500), ("red", 46500)):
        assert abs(c[name] - expected) <= 4 * math.sqrt(expected)
    t = s.times
    for ch in (BLUE, RED):
        counts = np.bincount((t[s.channels == ch]).astype(np.int64), minlength=500)[:500]
        assert counts.var(ddof=1) / counts.mean() == pytest.approx(1.0, abs=0.2)


def test_nonparalyzable_dead_time_rate():
    tau = 420e-9
    cfg = ScenarioConfig(duration=2.0, s_blue=1e6, seed=3, jitter_sigma=0.0)
    s = simulate(cfg)
    observed = len(s) / cfg.duration
    assert observed == pytest.approx(dead_time_rate(1e6, tau), rel=0.01)
    gaps = np.diff(s.ticks) * s.clock_fs
    # floor quantisation can shorten a gap by at most one tick
    assert gaps.min() >= round(tau * 1e15) - s.clock_fs


def test_per_channel_gaps_respect_dead_time_after_jitter():
    cfg = ScenarioConfig(duration=1.0, s_blue=2e5, s_red=2e5, seed=4)
    s = simulate(cfg)
    slack = 10 * cfg.jitter_sigma + cfg.clock_tick
    for ch in (BLUE, RED):
        t = s.ticks[s.channels == ch] * cfg.clock_tick
        assert np.diff(t).min() >= cfg.dead_time - slack


def test_determinism_and_seed_sensitivity():
    cfg = ScenarioConfig(duration=5.0, s_blue=300, s_red=800, dark_blue=41, dark_red=93,
                         crosstalk=CrosstalkFractions(0.01, 0.01), seed=99,
                         scintillation=ScintillationConfig())
    a, b = simulate(cfg), simulate(cfg)
    assert a.equals(b) and np.array_equal(a.origins, b.origins)
    c = simulate(ScenarioConfig.from_dict({**cfg.to_dict(), "seed": 100}))
    assert not a.equals(c)


def test_stream_sorted_nonnegative_and_tie_broken():
    cfg = ScenarioConfig(duration=2.0, s_blue=5e4, s_red=5e4, seed=11)
    s = simulate(cfg)
    assert np.all(s.ticks >= 0)
    key = s.ticks * 2 + s.channels
    assert np.all(np.diff(key) >= 0)


def test_origin_fractions_match_configuration():
    cfg = ScenarioConfig(duration=100.0, s_blue=600, s_red=1700, skyglow_blue=20, skyglow_red=60,
                         dark_blue=41, dark_red=93, crosstalk=CrosstalkFractions(0.05, 0.03), seed=5)
    s = simulate(cfg)
    expected = expected_corruption(cfg)
    got = empirical_corruption(s)
    for name, ch in (("blue", BLUE), ("red", RED)):
        n = int(np.count_nonzero(s.channels == ch))
        sigma = math.sqrt(expected[name] * (1 - expected[name]) / n)
        assert abs(got[name] - expected[name]) <= 3 * sigma
        # astronomical share of each arm
        astro = np.mean(s.origins[s.channels == ch] == ASTRONOMICAL)
        assert abs(astro - (1 - expected[name])) <= 3 * sigma


def test_ground_truth_q_matches_validity_budget():
    cfg = ScenarioConfig(duration=100.0, s_blue=608.7, s_red=1749.3, skyglow_blue=20, skyglow_red=60,
                         dark_blue=41, dark_red=93, crosstalk=CrosstalkFractions(0.002, 0.002), seed=6)
    s = simulate(cfg)
    c = s.counts()
    det = validity.DetectorObservation.from_rates(
        c["blue"] / cfg.duration, c["red"] / cfg.duration, 61.0, 153.0, 0.002, 0.002
    )
    budget = validity.corruption_probability(det)
    got = empirical_corruption(s)
    for name, p in (("blue", budget.p_blue), ("red", budget.p_red)):
        sigma = math.sqrt(p * (1 - p) / c[name])
        assert abs(got[name] - p) <= 3 * sigma


def test_poisson_arrivals_exponential_gaps():
    rng = np.random.default_rng(1)
    t = poisson_arrivals(rng, 1000.0, 50.0)
    assert t.size == pytest.approx(50_000, abs=4 * math.sqrt(50_000))
    assert t.max() < 50.0 and np.all(np.diff(t) > 0)
    assert stats.kstest(np.diff(t), "expon", args=(0, 1e-3)).pvalue > 0.01


def test_zero_depth_modulation_is_identity():
    mod = scintillation_modulator(ScintillationConfig(modulation_depth=0.0), 1.0, np.random.default_rng(0))
    assert np.all(mod.values == 1.0)


def test_zero_depth_stream_matches_unmodulated_statistics():
    base = dict(duration=50.0, s_blue=1000.0, s_red=1000.0, seed=8)
    plain = simulate(ScenarioConfig(**base))
    flat = simulate(ScenarioConfig(**{**base, "seed": 9},
                                   scintillation=ScintillationConfig(modulation_depth=0.0)))
    ga = np.diff(plain.times[plain.channels == BLUE])
    gb = np.diff(flat.times[flat.channels == BLUE])
    assert stats.ks_2samp(ga, gb).pvalue > 0.01


def test_modulation_is_mean_one_with_configured_spread():
    scint = ScintillationConfig(modulation_depth=0.5, correlation_time=5e-3, arm_coupling_mismatch=0.5)
    mod = scintillation_modulator(scint, 200.0, np.random.default_rng(2))
    for ch in (BLUE, RED):
        assert mod.values[ch].mean() == pytest.approx(1.0, abs=0.02)
        assert mod.values[ch].std() == pytest.approx(0.5, rel=0.1)
    lb, lr = np.log(mod.values)
    assert np.corrcoef(lb, lr)[0, 1] == pytest.approx(0.5, abs=0.05)


def test_zero_mismatch_gives_identical_arms():
    scint = ScintillationConfig(modulation_depth=0.5, arm_coupling_mismatch=0.0)
    mod = scintillation_modulator(scint, 1.0, np.random.default_rng(3))
    np.testing.assert_array_equal(mod.values[0], mod.values[1])


def test_scintillation_raises_count_variance():
    cfg = ScenarioConfig(duration=200.0, s_blue=2000.0, seed=12,
                         scintillation=ScintillationConfig(0.8, 50e-3, 0.0))
    s = simulate(cfg)
    counts = np.bincount((s.times / 1.0).astype(np.int64), minlength=200)[:200]
    assert counts.var(ddof=1) / counts.mean() > 1.2


# ---------------------------------------------------------------- cross-channel filter


def _stream(ticks, channels, clock_fs=1000):
    from arng.stream import TagStream

    return TagStream(np.array(ticks), np.array(channels), clock_fs=clock_fs)


def test_filter_removes_close_pair():
    # 1 ps ticks: events 100 ns apart
    s = _stream([0, 100_000], [0, 1])
    assert len(cross_channel_deadtime_filter(s, 420e-9)) == 1


def test_filter_keeps_spaced_events():
    s = _stream(np.arange(10) * 1_000_000, [0, 1] * 5)
    assert len(cross_channel_deadtime_filter(s, 420e-9)) == 10


def test_filter_idempotent_and_min_gap(backend):
    cfg = ScenarioConfig(duration=1.0, s_blue=3e5, s_red=3e5, seed=13)
    s = simulate(cfg)
    once = cross_channel_deadtime_filter(s, 420e-9, backend=backend)
    twice = cross_channel_deadtime_filter(once, 420e-9, backend=backend)
    assert once.equals(twice)
    assert np.diff(once.ticks).min() * once.clock_fs >= 420_000_000

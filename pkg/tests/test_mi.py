import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arng.mi import (
    InsufficientDataError,
    NullDistribution,
    _chunk_bounds,
    conditional_probability_table,
    corrected_mutual_information,
    mi_report,
    plugin_mutual_information,
    poisson_variance_check,
    solve_bias_ansatz,
    surrogate_bits,
    surrogate_null,
)
from arng.simulate import ScenarioConfig, ScintillationConfig, simulate
from arng.stream import TagStream

from conftest import markov_bits, markov_chain_mi


def test_alternating_sequence_has_one_bit(backend):
    # 4095 overlapping pairs, so the marginals are off 50/50 by one count
    bits = np.arange(4096) % 2
    assert plugin_mutual_information(bits, 1, backend) == pytest.approx(1.0, abs=1e-6)
    assert corrected_mutual_information(bits, 1, backend).corrected_value == pytest.approx(1.0, abs=1e-6)


def test_constant_sequence_has_zero():
    assert plugin_mutual_information(np.ones(1024), 2) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_complement_invariance(seed, m):
    bits = (np.random.default_rng(seed).random(2 ** (m + 7)) < 0.3).astype(np.uint8)
    a = plugin_mutual_information(bits, m)
    b = plugin_mutual_information(1 - bits, m)
    assert a == pytest.approx(b, abs=1e-12)
    assert a >= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_reversal_invariance_for_m1(seed, m):
    # the 2-gram joint of a reversed sequence is the transpose
    bits = (np.random.default_rng(seed).random(2 ** (m + 7)) < 0.6).astype(np.uint8)
    assert plugin_mutual_information(bits, 1) == pytest.approx(plugin_mutual_information(bits[::-1], 1), abs=1e-12)


@settings(max_examples=100)
@given(
    st.floats(-1, 1, allow_nan=False),
    st.floats(-1e3, 1e3, allow_nan=False),
    st.floats(-1e6, 1e6, allow_nan=False),
    st.integers(64, 10**7),
)
def test_solver_recovers_ansatz(info, a, b, n):
    f = lambda N: info + a / N + b / N**2
    got = solve_bias_ansatz(f(n), f(n / 2), f(n / 4), n)
    assert got[0] == pytest.approx(info, abs=1e-12 + 1e-9 * (abs(a) / n + abs(b) / n**2))
    assert got[1] == pytest.approx(a, rel=1e-6, abs=1e-6 * (1 + abs(b) / n))


def test_chunks_are_contiguous_and_cover():
    for n in (64, 1001, 2**16 + 3):
        for parts in (2, 4):
            bounds = _chunk_bounds(n, parts)
            assert bounds[0][0] == 0 and bounds[-1][1] == n
            assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))
            sizes = [b - a for a, b in bounds]
            assert max(sizes) - min(sizes) <= 1


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        corrected_mutual_information(np.zeros(2**8), 3)
    with pytest.raises(InsufficientDataError):
        plugin_mutual_information(np.zeros(31), 1)
    with pytest.raises(ValueError):
        plugin_mutual_information(np.zeros(1000), 0)


def test_markov_chain_recovered():
    p11, p1 = 0.8, 0.74
    truth = markov_chain_mi(p11, p1)
    bits = markov_bits(1_000_000, p11, p1, seed=3)
    est = corrected_mutual_information(bits, 1)
    assert est.corrected_value == pytest.approx(truth, rel=0.1)
    null = surrogate_null(bits, 1, count=20, seed=1)
    assert null.significant()


def test_correction_removes_iid_bias():
    # plug-in is biased upward for iid bits, correction is near zero on average
    plug, corr = [], []
    for k in range(40):
        bits = (np.random.default_rng(k).random(2**14) < 0.74).astype(np.uint8)
        plug.append(plugin_mutual_information(bits, 3))
        corr.append(corrected_mutual_information(bits, 3).corrected_value)
    plug, corr = np.array(plug), np.array(corr)
    assert plug.mean() > 0
    assert abs(corr.mean()) < 4 * corr.std(ddof=1) / math.sqrt(corr.size)
    assert abs(corr.mean()) < plug.mean()


def test_surrogates_deterministic_and_bernoulli():
    bits = (np.random.default_rng(0).random(10_000) < 0.3).astype(np.uint8)
    a, b = surrogate_bits(bits, 5, 9), surrogate_bits(bits, 5, 9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, surrogate_bits(bits, 6, 9))
    assert a.mean() == pytest.approx(0.3, abs=0.02)
    perm = surrogate_bits(bits, 0, 0, "permutation")
    assert perm.sum() == bits.sum()
    with pytest.raises(ValueError):
        surrogate_bits(bits, 0, 0, "bogus")


def test_iid_data_not_significant():
    bits = (np.random.default_rng(11).random(2**16) < 0.74).astype(np.uint8)
    rep = mi_report(bits, depths=(1, 2, 3), count=30, seed=4)
    assert not rep["any_significant"]
    assert rep["depths"] == [1, 2, 3]


def test_null_rank_uniform_under_h0():
    # data drawn from the same process as the surrogates: rank is uniform on 0..count
    count, ranks = 9, []
    for k in range(60):
        bits = (np.random.default_rng(1000 + k).random(2**12) < 0.5).astype(np.uint8)
        ranks.append(surrogate_null(bits, 1, count=count, seed=k).rank)
    ranks = np.array(ranks)
    assert abs(ranks.mean() - count / 2) < 4 * math.sqrt((count + 1) ** 2 / 12 / ranks.size)
    assert np.mean(ranks == count) < 0.3


def test_null_distribution_statistics():
    nd = NullDistribution(1, 1.0, (0.0, 0.1, -0.1, 0.05, -0.05))
    assert nd.rank == 5 and nd.count == 5
    assert nd.p_value == pytest.approx(1 / 6)
    assert nd.z_score > 3 and nd.significant()
    assert not NullDistribution(1, 0.0, (0.0, 0.1)).significant()


def test_mi_report_skips_deep_orders():
    bits = (np.random.default_rng(1).random(2**9) < 0.5).astype(np.uint8)
    rep = mi_report(bits, depths=(1, 2, 3, 4), count=3)
    assert rep["depths"] == [1, 2, 3] and rep["skipped"] == [4]
    with pytest.raises(InsufficientDataError):
        mi_report(bits[:50], depths=(1,))


def test_conditional_table_for_markov():
    bits = markov_bits(200_000, 0.8, 0.74, seed=5)
    rows = conditional_probability_table(bits, 1)
    assert [r["history"] for r in rows] == ["0", "1"]
    assert rows[1]["p_next_one"] == pytest.approx(0.8, abs=0.01)
    assert rows[1]["excess"] > 0 > rows[0]["excess"]
    assert sum(r["count"] for r in rows) == bits.size - 1


def test_poisson_check_deterministic_and_bursty():
    # perfectly regular events: variance 0
    ticks = np.arange(0, 200_000) * 10**9  # one per ms at 1 ps ticks
    s = TagStream(ticks, np.zeros_like(ticks), clock_fs=1000, duration=200.0)
    rep = poisson_variance_check(s)
    assert rep["channels"]["blue"]["fano"] == pytest.approx(0.0, abs=1e-9)
    assert not rep["pass"]

    cfg = ScenarioConfig(duration=300.0, s_blue=2000.0, s_red=2000.0, seed=3,
                         scintillation=ScintillationConfig(0.8, 50e-3, 0.0))
    rep = poisson_variance_check(simulate(cfg))
    assert rep["channels"]["blue"]["fano"] > 1.2

    flat = simulate(ScenarioConfig(duration=300.0, dark_blue=41.0, dark_red=93.0, seed=3))
    assert poisson_variance_check(flat)["pass"]

    with pytest.raises(InsufficientDataError):
        poisson_variance_check(TagStream([0, 1], [0, 0], duration=10.0))


def test_plugin_matches_closed_form_chain():
    p11, p1 = 0.751, 0.726
    truth = markov_chain_mi(p11, p1)
    # the chain's own MI, computed independently of the estimator
    assert truth == pytest.approx(5.848e-3, rel=1e-3)
    bits = markov_bits(1_000_000, p11, p1, seed=17)
    assert plugin_mutual_information(bits, 1) == pytest.approx(truth, rel=0.1)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arng.bits import (
    BitStream,
    bits_from_color,
    bits_from_time_parity,
    decode_bits,
    encode_bits,
    imbalance_report,
    nist_ascii,
    read_bits,
    write_bits,
    write_nist_ascii,
)
from arng.simulate import ScenarioConfig, simulate
from arng.spectral import CrosstalkFractions
from arng.stream import TagStream


def test_color_mapping():
    s = TagStream([1, 2, 3], [0, 1, 0])
    np.testing.assert_array_equal(bits_from_color(s).bits, [0, 1, 0])


def test_time_parity_example():
    # 1 ps clock; 1.5 ns and 2.5 ns with a 1 ns digit period
    s = TagStream([1500, 2500], [0, 0], clock_fs=1000)
    np.testing.assert_array_equal(bits_from_time_parity(s, 1e-9).bits, [1, 0])


def test_time_parity_rejects_subtick_period():
    with pytest.raises(ValueError):
        bits_from_time_parity(TagStream([1], [0], clock_fs=1000), 1e-16)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 2**40), min_size=1, max_size=100), st.integers(1, 1000))
def test_time_parity_shift_by_period_flips(ticks, k):
    # shifting every event by exactly one digit period inverts every bit
    clock_fs, period_fs = 1000, 1000 * k
    ticks = np.sort(np.array(ticks, dtype=np.int64))
    a = bits_from_time_parity(TagStream(ticks, np.zeros_like(ticks), clock_fs), period_fs * 1e-15)
    b = bits_from_time_parity(TagStream(ticks + k, np.zeros_like(ticks), clock_fs), period_fs * 1e-15)
    np.testing.assert_array_equal(a.bits, 1 - b.bits)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=300))
def test_color_bits_swap_channels_complements(chans):
    ticks = np.arange(len(chans))
    a = bits_from_color(TagStream(ticks, chans)).bits
    b = bits_from_color(TagStream(ticks, 1 - np.array(chans))).bits
    np.testing.assert_array_equal(a, 1 - b)


def test_time_parity_balanced_for_poisson():
    s = simulate(ScenarioConfig(duration=20.0, s_blue=5000.0, seed=21))
    rep = imbalance_report(bits_from_time_parity(s))
    assert abs(rep["ones_fraction"] - 0.5) < 4 * rep["ones_fraction_stderr"]


def test_time_parity_periodic_pathology():
    # events every 20 ns with a 10 ns digit: every bit identical
    s = TagStream(np.arange(1000) * 20_000, np.zeros(1000), clock_fs=1000)
    assert set(bits_from_time_parity(s, 10e-9).bits.tolist()) == {0}


def test_color_bias_for_3c273_rates():
    cfg = ScenarioConfig(duration=50.0, s_blue=608.7, s_red=1749.3, skyglow_blue=20, skyglow_red=60,
                         dark_blue=41, dark_red=93, crosstalk=CrosstalkFractions(0.002, 0.002), seed=2)
    rep = imbalance_report(bits_from_color(simulate(cfg)), window=1000)
    assert rep["ones_fraction"] == pytest.approx(0.74, abs=0.01)
    assert len(rep["window_ones_fraction"]) == rep["n_bits"] // 1000


def test_imbalance_report_empty():
    with pytest.raises(ValueError):
        imbalance_report(BitStream.from_array([]))


def test_nist_ascii_layout(tmp_path):
    bits = BitStream.from_array(np.arange(170) % 2)
    text = nist_ascii(bits)
    lines = text.splitlines()
    assert [len(l) for l in lines] == [80, 80, 10]
    assert text.startswith("0101")
    write_nist_ascii(tmp_path / "b.txt", bits)
    np.testing.assert_array_equal(read_bits(tmp_path / "b.txt").bits, bits.bits)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=500))
def test_packed_round_trip(bits):
    b = BitStream.from_array(bits, source="x")
    back = decode_bits(encode_bits(b))
    np.testing.assert_array_equal(back.bits, b.bits)
    assert back.metadata["source"] == "x"


def test_packed_file_and_bad_data(tmp_path):
    b = BitStream.from_array([1, 0, 1, 1, 0, 0, 0, 1, 1])
    write_bits(tmp_path / "b.bin", b)
    np.testing.assert_array_equal(read_bits(tmp_path / "b.bin").bits, b.bits)
    with pytest.raises(ValueError):
        decode_bits(b"ARN")
    with pytest.raises(ValueError):
        BitStream(np.array([0, 2]))

"""Repetition profiles and chase combining.

Profile values for the direct tests were derived by hand from the
definition: with mother rate 1/3 and target R, each coded bit is sent
psi = ceil((1/3)/R) - 1 or psi + 1 times, and the probability mass on
the higher count is (1/3)/R - psi.
"""

from fractions import Fraction

import numpy as np
import pytest

from icturbo.rate_matching import MOTHER_RATE, apply_repetition, chase_combine, repetition_profile
from icturbo.turbo import LLR_SAT


@pytest.mark.parametrize(
    "rate,psi,p_low,p_high",
    [
        (1 / 4, 1, 2 / 3, 1 / 3),
        (1 / 5, 1, 1 / 3, 2 / 3),
        (1 / 6, 1, 0.0, 1.0),  # exactly two copies of everything
        (1 / 3, 0, 0.0, 1.0),  # degenerate: the mother code itself
        (0.3, 1, 8 / 9, 1 / 9),
    ],
)
def test_profile_hand_values(rate, psi, p_low, p_high):
    prof = repetition_profile(rate)
    assert prof.psi == psi
    assert prof.p_low == pytest.approx(p_low, abs=1e-12)
    assert prof.p_high == pytest.approx(p_high, abs=1e-12)


def test_profile_simplex_property():
    for rate in np.linspace(0.02, MOTHER_RATE, 50):
        prof = repetition_profile(float(rate))
        assert 0.0 <= prof.p_high <= 1.0
        assert prof.p_low + prof.p_high == pytest.approx(1.0, abs=1e-12)
        assert prof.psi >= 0


def test_profile_rejects_unservable_rates():
    for rate in (0.0, -0.1, 0.34, 0.5):
        with pytest.raises(ValueError):
            repetition_profile(rate)


def test_total_transmissions_achieves_rate():
    n = 3 * 6144
    for rate in (1 / 4, 1 / 5, 0.28, 0.3182):
        prof = repetition_profile(rate)
        total = prof.total_transmissions(n)
        realized = (n / 3) / total
        assert realized == pytest.approx(rate, rel=2e-4)


@pytest.mark.parametrize("mode", ["deterministic", "random"])
def test_repetition_counts(mode):
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, size=999, dtype=np.uint8)
    prof = repetition_profile(0.21)
    tx, rep_map = apply_repetition(bits, prof, mode, rng)
    assert tx.size == prof.total_transmissions(bits.size) == rep_map.size
    counts = np.bincount(rep_map, minlength=bits.size)
    assert set(counts) <= {prof.psi, prof.psi + 1}
    assert np.sum(counts == prof.psi + 1) == prof.high_count(bits.size)
    assert np.array_equal(tx, bits[rep_map])


def test_deterministic_map_is_circular():
    bits = np.arange(10) % 2
    prof = repetition_profile(1 / 4)
    _, rep_map = apply_repetition(bits.astype(np.uint8), prof, "deterministic")
    assert np.array_equal(rep_map, np.arange(rep_map.size) % bits.size)


def test_random_mode_requires_rng():
    with pytest.raises(ValueError):
        apply_repetition(np.zeros(8, dtype=np.uint8), repetition_profile(0.25), "random")


def test_chase_combining_sums_llrs():
    llr = np.array([1.0, -2.0, 0.5, 3.0, -1.0])
    rep_map = np.array([0, 1, 0, 2, 1])
    out = chase_combine(llr, rep_map, 4)
    assert out == pytest.approx([1.5, -3.0, 3.0, 0.0])  # index 3 is an erasure


def test_chase_combining_saturates():
    llr = np.full(5, 30.0)
    out = chase_combine(llr, np.zeros(5, dtype=np.int64), 1)
    assert out[0] == LLR_SAT


def test_combined_snr_gain():
    """Repeating a bit m times and combining multiplies the LLR mean by m."""
    rng = np.random.default_rng(6)
    from icturbo.channel import AwgnChannel, ChannelConfig

    bits = np.zeros(40_000, dtype=np.uint8)
    prof = repetition_profile(1 / 6)
    tx, rep_map = apply_repetition(bits, prof, "deterministic")
    ch = AwgnChannel(ChannelConfig(-2.0), rng=rng)
    combined = chase_combine(ch.demodulate(ch.transmit(tx)), rep_map, bits.size)
    single = ch.demodulate(ch.transmit(bits))
    assert combined.mean() == pytest.approx(2 * single.mean(), rel=0.03)


def test_rate_respects_exact_fraction():
    prof = repetition_profile(0.25)
    n = 1200
    assert Fraction(n // 3, prof.total_transmissions(n)) == Fraction(1, 4)

"""BPSK/AWGN model and the LLR mutual information estimator."""

import math

import numpy as np
import pytest

from icturbo.channel import (
    AwgnChannel,
    ChannelConfig,
    db_to_linear,
    linear_to_db,
    llr_mutual_information,
    snr_db_to_sigma_tilde,
)
from icturbo.turbo import LLR_SAT


def test_db_roundtrip():
    for db in (-10.0, -5.5, 0.0, 3.0):
        assert linear_to_db(db_to_linear(db)) == pytest.approx(db, abs=1e-12)


def test_sigma_tilde_definition():
    # the all-zero word sees LLRs ~ N(2/sigma^2, 4/sigma^2); at Es = 1
    # that std is sqrt(8 * snr), checked against the raw formula
    for db in (-6.0, -5.0, 0.0):
        rho = 10 ** (db / 10)
        assert snr_db_to_sigma_tilde(db) == pytest.approx(math.sqrt(8 * rho), rel=1e-12)


def test_noise_variance_convention():
    cfg = ChannelConfig(0.0)  # 0 dB, Es = 1
    assert cfg.noise_variance == pytest.approx(0.5)
    assert ChannelConfig(math.inf).noise_variance == 0.0


def test_bpsk_mapping_and_noiseless_path():
    ch = AwgnChannel(ChannelConfig(math.inf))
    bits = np.array([0, 1, 1, 0], dtype=np.uint8)
    y = ch.transmit(bits)
    assert np.array_equal(y, [1.0, -1.0, -1.0, 1.0])
    llr = ch.demodulate(y)
    assert np.array_equal(llr, [LLR_SAT, -LLR_SAT, -LLR_SAT, LLR_SAT])


def test_llr_statistics_match_channel():
    rng = np.random.default_rng(0)
    snr_db = -3.0
    ch = AwgnChannel(ChannelConfig(snr_db), rng=rng)
    bits = np.zeros(200_000, dtype=np.uint8)
    llr = ch.demodulate(ch.transmit(bits))
    sigma_t = snr_db_to_sigma_tilde(snr_db)
    # Gaussian consistency: mean = sigma_tilde^2 / 2, std = sigma_tilde
    assert llr.mean() == pytest.approx(sigma_t ** 2 / 2, rel=0.02)
    assert llr.std() == pytest.approx(sigma_t, rel=0.02)


def test_rejects_non_binary_input():
    ch = AwgnChannel(ChannelConfig(0.0))
    with pytest.raises(ValueError):
        ch.transmit(np.array([0, 2]))


def test_mutual_information_endpoints():
    bits = np.random.default_rng(1).integers(0, 2, 10_000, dtype=np.uint8)
    perfect = LLR_SAT * (1.0 - 2.0 * bits.astype(float))
    assert llr_mutual_information(perfect, bits) == pytest.approx(1.0, abs=1e-9)
    assert llr_mutual_information(np.zeros_like(perfect), bits) == pytest.approx(0.0, abs=1e-12)
    # sign-flipped knowledge is worse than none; the estimate clips at 0
    assert llr_mutual_information(-perfect, bits) == 0.0

"""BPSK over real AWGN, LLR demodulation, and an LLR quality estimator.

SNR is Es/N0 with Es = 1, so the per-sample noise variance is
sigma^2 = 1 / (2 * snr_linear). Bit 0 maps to +1 and bit 1 to -1, which
keeps LLRs positive for bit 0 throughout the library. The demodulated
LLR 2y/sigma^2 is Gaussian with mean +-sigma_tilde^2/2 and variance
sigma_tilde^2 = 4/sigma^2, the usual consistency condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .turbo import LLR_SAT, saturate


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def snr_db_to_sigma_tilde(snr_db: float) -> float:
    """Std of the demodulated channel LLR, sqrt(8 * snr_linear)."""
    return math.sqrt(8.0 * db_to_linear(snr_db))


@dataclass(frozen=True)
class ChannelConfig:
    """snr_db may be math.inf for the noiseless limit (y = x exactly)."""

    snr_db: float
    es: float = 1.0

    @property
    def noise_variance(self) -> float:
        if math.isinf(self.snr_db):
            return 0.0
        return self.es / (2.0 * db_to_linear(self.snr_db))


class AwgnChannel:
    def __init__(self, config: ChannelConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng()

    def transmit(self, bits) -> np.ndarray:
        """Map bits to +-sqrt(Es) and add white Gaussian noise."""
        bits = np.asarray(bits)
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ValueError("channel input must be 0/1 bits")
        x = math.sqrt(self.config.es) * (1.0 - 2.0 * bits.astype(np.float64))
        sigma2 = self.config.noise_variance
        if sigma2 == 0.0:
            return x
        return x + self.rng.normal(0.0, math.sqrt(sigma2), size=x.shape)

    def demodulate(self, y) -> np.ndarray:
        """Per-sample LLR 2y/sigma^2, saturated at +-LLR_SAT."""
        y = np.asarray(y, dtype=np.float64)
        sigma2 = self.config.noise_variance
        if sigma2 == 0.0:
            return np.sign(y) * LLR_SAT
        return saturate(2.0 * y / sigma2)


def llr_mutual_information(llr, bits) -> float:
    """Mutual information (bits) carried by LLRs about known equiprobable bits.

    Uses the averaging estimator I = 1 - E[log2(1 + exp(-L*(1-2v)))],
    exact for any symmetric consistent LLR distribution and robust for
    Monte Carlo samples. Clipped to [0, 1].
    """
    llr = np.asarray(llr, dtype=np.float64)
    bits = np.asarray(bits)
    if llr.shape != bits.shape:
        raise ValueError("llr and bit arrays must have matching shapes")
    signed = llr * (1.0 - 2.0 * bits.astype(np.float64))
    i = 1.0 - np.mean(np.logaddexp(0.0, -signed)) / math.log(2.0)
    return float(min(max(i, 0.0), 1.0))

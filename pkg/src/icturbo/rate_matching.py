"""Rate matching below the mother rate by coded-bit repetition.

For a target rate R below the mother rate R0 = 1/3, every coded bit is
transmitted either Psi or Psi + 1 times, where

    Psi = ceil(R0 / R) - 1,
    p_low  = 1 + Psi - R0 / R   (fraction transmitted Psi times),
    p_high = R0 / R - Psi       (fraction transmitted Psi + 1 times),

so the average transmission count is exactly R0 / R. The receiver folds
repeats back with Chase combining (LLR addition), which raises the
effective SNR of a bit by its transmission count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .turbo import saturate

MOTHER_RATE = 1.0 / 3.0


@dataclass(frozen=True)
class RepetitionProfile:
    rate: float
    mother_rate: float
    psi: int
    p_low: float
    p_high: float

    def high_count(self, source_len: int) -> int:
        """Bits transmitted psi+1 times; round-half-even keeps the rate exact on average."""
        n = int(round(self.p_high * source_len))
        return min(n, source_len)

    def total_transmissions(self, source_len: int) -> int:
        return self.psi * source_len + self.high_count(source_len)


def repetition_profile(rate: float, mother_rate: float = MOTHER_RATE) -> RepetitionProfile:
    if not 0.0 < rate <= mother_rate:
        raise ValueError(f"repetition supports rates in (0, {mother_rate:.4f}], got {rate}")
    ratio = mother_rate / rate
    psi = int(np.ceil(ratio)) - 1
    p_high = ratio - psi
    p_low = 1.0 + psi - ratio
    return RepetitionProfile(rate, mother_rate, psi, p_low, p_high)


def apply_repetition(
    bits,
    profile: RepetitionProfile,
    mode: str = "deterministic",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Expand a coded block into its transmitted stream.

    Returns (tx_bits, rep_map) with rep_map[j] the source index of the
    j-th transmitted bit. Deterministic mode reads the block as a
    circular buffer, so the extra copies land on a contiguous prefix;
    random mode spreads them over a uniformly drawn subset.
    """
    bits = np.asarray(bits)
    n = bits.size
    total = profile.total_transmissions(n)
    if mode == "deterministic":
        rep_map = np.arange(total, dtype=np.int64) % n
    elif mode == "random":
        if rng is None:
            raise ValueError("random repetition requires an rng")
        counts = np.full(n, profile.psi, dtype=np.int64)
        extra = rng.choice(n, size=profile.high_count(n), replace=False)
        counts[extra] += 1
        rep_map = np.repeat(np.arange(n, dtype=np.int64), counts)
    else:
        raise ValueError(f"unknown repetition mode {mode!r}")
    return bits[rep_map], rep_map


def chase_combine(llr, rep_map, source_len: int) -> np.ndarray:
    """Sum the LLRs of all transmissions of each source bit.

    Source bits with no transmissions combine to 0 (erasure).
    """
    llr = np.asarray(llr, dtype=np.float64)
    rep_map = np.asarray(rep_map)
    if llr.shape != rep_map.shape:
        raise ValueError("llr and repetition map must have matching shapes")
    if rep_map.size and (rep_map.min() < 0 or rep_map.max() >= source_len):
        raise ValueError("repetition map index out of range")
    return saturate(np.bincount(rep_map, weights=llr, minlength=source_len))

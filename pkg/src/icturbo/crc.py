"""CRC attachment and checking for transport blocks and code blocks.

Two degree-24 generators are used, following the LTE multiplexing rules:
CRC24A protects the transport block and CRC24B protects each code block.
Both run with zero initial state and no output XOR, so the parity of a
message is the remainder of message(x) * x^24 divided by the generator
over GF(2), and an all-zero message yields an all-zero checksum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CRC_LEN = 24


@dataclass(frozen=True)
class CrcPolynomial:
    """Degree-24 binary generator polynomial, coefficients MSB first."""

    name: str
    coefficients: tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) != CRC_LEN + 1:
            raise ValueError(f"{self.name}: expected {CRC_LEN + 1} coefficients")
        if self.coefficients[0] != 1 or self.coefficients[-1] != 1:
            raise ValueError(f"{self.name}: x^24 and x^0 coefficients must be 1")
        if any(c not in (0, 1) for c in self.coefficients):
            raise ValueError(f"{self.name}: coefficients must be binary")

    @property
    def value(self) -> int:
        """Low 24 bits of the generator as an integer (x^24 term dropped)."""
        v = 0
        for c in self.coefficients[1:]:
            v = (v << 1) | c
        return v


def _poly_from_exponents(name: str, exponents: tuple[int, ...]) -> CrcPolynomial:
    coeffs = [0] * (CRC_LEN + 1)
    for e in exponents:
        coeffs[CRC_LEN - e] = 1
    return CrcPolynomial(name, tuple(coeffs))


# gCRC24A(D) and gCRC24B(D) generator exponents.
CRC24A = _poly_from_exponents(
    "CRC24A", (24, 23, 18, 17, 14, 11, 10, 7, 6, 5, 4, 3, 1, 0)
)
CRC24B = _poly_from_exponents("CRC24B", (24, 23, 6, 5, 1, 0))

# Byte-wise lookup tables, built on first use per generator.
_TABLES: dict[int, np.ndarray] = {}


def _table_for(poly: CrcPolynomial) -> np.ndarray:
    table = _TABLES.get(poly.value)
    if table is None:
        table = np.zeros(256, dtype=np.uint32)
        for byte in range(256):
            reg = byte << 16
            for _ in range(8):
                reg <<= 1
                if reg & (1 << 24):
                    reg ^= (1 << 24) | poly.value
            table[byte] = reg
        _TABLES[poly.value] = table
    return table


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit sequence must contain only 0s and 1s")
    return arr.astype(np.uint8)


def crc24_compute(bits, poly: CrcPolynomial) -> np.ndarray:
    """24-bit remainder of bits(x) * x^24 mod poly, MSB first.

    Leading zeros do not change the remainder (zero initial state), so the
    message is left-padded to a byte boundary and folded byte by byte.
    """
    msg = _as_bits(bits)
    pad = (-msg.size) % 8
    if pad:
        msg = np.concatenate([np.zeros(pad, dtype=np.uint8), msg])
    table = _table_for(poly)
    reg = 0
    for byte in np.packbits(msg):
        reg = ((reg << 8) & 0xFFFFFF) ^ int(table[((reg >> 16) ^ byte) & 0xFF])
    out = np.zeros(CRC_LEN, dtype=np.uint8)
    for i in range(CRC_LEN):
        out[i] = (reg >> (CRC_LEN - 1 - i)) & 1
    return out


def crc24_attach(bits, poly: CrcPolynomial) -> np.ndarray:
    """Append the 24 parity bits so the whole sequence divides the generator."""
    msg = _as_bits(bits)
    return np.concatenate([msg, crc24_compute(msg, poly)])


def crc24_check(bits_with_crc, poly: CrcPolynomial) -> bool:
    """True when the trailing 24 bits are the checksum of the leading bits."""
    seq = _as_bits(bits_with_crc)
    if seq.size < CRC_LEN + 1:
        raise ValueError("sequence too short to contain a message and its CRC")
    return bool((crc24_compute(seq[:-CRC_LEN], poly) == seq[-CRC_LEN:]).all())

"""Constituent encoder and interleaver checks.

The oracle treats the recursive encoder as a sequence-domain filter: the
feedback recurrence w[k] = u[k] ^ w[k-2] ^ w[k-3] solves g0(D)w = u, and
the parity output is g1(D)w = w[k] ^ w[k-1] ^ w[k-3]. No state packing,
no transition tables, so it shares nothing with the kernel under test.
"""

import numpy as np
import pytest

from icturbo import kernels
from icturbo.turbo import (
    QPP_PARAMS,
    VALID_CB_LENGTHS,
    cc_encode,
    qpp_interleaver,
    turbo_encode,
)


def oracle_encode(bits):
    w = []
    for k, u in enumerate(bits):
        w.append(int(u) ^ (w[k - 2] if k >= 2 else 0) ^ (w[k - 3] if k >= 3 else 0))
    n = len(bits)
    tail_sys = []
    for k in range(n, n + 3):
        tail_sys.append((w[k - 2] if k >= 2 else 0) ^ (w[k - 3] if k >= 3 else 0))
        w.append(0)  # the termination input zeroes the register feed
    par = [w[k] ^ (w[k - 1] if k >= 1 else 0) ^ (w[k - 3] if k >= 3 else 0) for k in range(n + 3)]
    return (
        np.array(par[:n], dtype=np.uint8),
        np.array(tail_sys, dtype=np.uint8),
        np.array(par[n:], dtype=np.uint8),
    )


@pytest.mark.parametrize("length", [1, 2, 3, 4, 8, 40, 257])
def test_rsc_encode_matches_filter_oracle(length):
    rng = np.random.default_rng(length)
    for _ in range(20):
        bits = rng.integers(0, 2, size=length, dtype=np.uint8)
        parity, tail_sys, tail_par = kernels.rsc_encode(
            bits, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
        )
        ref_par, ref_tsys, ref_tpar = oracle_encode(bits)
        assert np.array_equal(parity, ref_par)
        assert np.array_equal(tail_sys, ref_tsys)
        assert np.array_equal(tail_par, ref_tpar)


def test_termination_reaches_state_zero():
    rng = np.random.default_rng(1)
    for _ in range(20):
        bits = rng.integers(0, 2, size=64, dtype=np.uint8)
        _, state = cc_encode(bits)
        _, tail_sys, _ = kernels.rsc_encode(
            bits, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
        )
        _, end_state = cc_encode(tail_sys, initial_state=state)
        assert end_state == 0


def test_trellis_tables_shape():
    assert kernels.NEXT_STATE.shape == (8, 2)
    # every input pair leads to distinct states and each state has
    # exactly two predecessors
    for u in (0, 1):
        assert sorted(kernels.NEXT_STATE[:, u]) == sorted(range(8))
    assert np.all((kernels.PARITY_BIT == 0) | (kernels.PARITY_BIT == 1))


def test_qpp_table_shape():
    assert len(QPP_PARAMS) == 188
    assert VALID_CB_LENGTHS[0] == 40 and VALID_CB_LENGTHS[-1] == 6144


def test_qpp_direct_evaluation():
    # K=40 uses (f1, f2) = (3, 10): pi(i) = (3i + 10i^2) mod 40
    il = qpp_interleaver(40)
    assert [il.perm[i] for i in range(4)] == [0, 13, 6, 19]
    for k in VALID_CB_LENGTHS[::19]:
        f1, f2 = QPP_PARAMS[k]
        spec = qpp_interleaver(k)
        i = np.arange(k, dtype=np.int64)
        assert np.array_equal(spec.perm, (f1 * i + f2 * i * i) % k)


@pytest.mark.parametrize("k", list(VALID_CB_LENGTHS[::7]))
def test_qpp_is_a_bijection(k):
    spec = qpp_interleaver(k)
    assert np.array_equal(np.sort(spec.perm), np.arange(k))
    x = np.random.default_rng(k).normal(size=k)
    assert np.array_equal(spec.invert(spec.apply(x)), x)


def test_unsupported_length_needs_fallback():
    with pytest.raises(ValueError):
        qpp_interleaver(41)
    spec = qpp_interleaver(41, allow_fallback=True)
    assert np.array_equal(np.sort(spec.perm), np.arange(41))
    again = qpp_interleaver(41, allow_fallback=True)
    assert np.array_equal(spec.perm, again.perm)


def test_turbo_encode_structure():
    rng = np.random.default_rng(2)
    k = 64
    il = qpp_interleaver(k, allow_fallback=True)
    bits = rng.integers(0, 2, size=k, dtype=np.uint8)
    cw = turbo_encode(bits, il)
    assert np.array_equal(cw.systematic, bits)
    ref1 = oracle_encode(bits)
    ref2 = oracle_encode(bits[il.perm])
    assert np.array_equal(cw.parity1, ref1[0])
    assert np.array_equal(cw.parity2, ref2[0])
    # tail layout: constituent 1 sys, par then constituent 2 sys, par
    assert np.array_equal(cw.tail, np.concatenate([ref1[1], ref1[2], ref2[1], ref2[2]]))
    assert cw.tail.size == 12

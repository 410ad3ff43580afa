"""Log-MAP correctness against exhaustive enumeration.

The oracle scores every possible input word of a short terminated frame
(codeword metric = sum of 0.5 * (1-2bit) * LLR over systematic, parity,
and tail symbols) and forms the exact posterior with logsumexp. The
recursion must reproduce it to floating point accuracy, not just to
max-log accuracy.
"""

import numpy as np
import pytest
from scipy.special import logsumexp

from icturbo import kernels
from icturbo.turbo import LLR_SAT, bcjr_decode


def enumerate_posterior(sys_llr, par_llr, tail_sys, tail_par, apriori):
    k = sys_llr.size
    metrics = np.empty(2 ** k)
    inputs = np.empty((2 ** k, k), dtype=np.uint8)
    for m in range(2 ** k):
        u = np.array([(m >> i) & 1 for i in range(k)], dtype=np.uint8)
        parity, tsys, tpar = kernels.rsc_encode(
            u, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
        )
        half = lambda b, l: 0.5 * np.sum((1.0 - 2.0 * b) * l)
        metrics[m] = (
            half(u, sys_llr + apriori) + half(parity, par_llr)
            + half(tsys, tail_sys) + half(tpar, tail_par)
        )
        inputs[m] = u
    return np.array([
        logsumexp(metrics[inputs[:, i] == 0]) - logsumexp(metrics[inputs[:, i] == 1])
        for i in range(k)
    ])


def random_frame(rng, k=8, scale=2.0):
    return (
        rng.normal(0, scale, k),
        rng.normal(0, scale, k),
        rng.normal(0, scale, 3),
        rng.normal(0, scale, 3),
        rng.normal(0, 1, k),
    )


def test_posterior_equals_enumeration():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(10):
        frame = random_frame(rng)
        _, post = bcjr_decode(*frame)
        ref = enumerate_posterior(*frame)
        worst = max(worst, np.abs(post - ref).max())
    assert worst < 1e-9


def test_extrinsic_strips_inputs():
    rng = np.random.default_rng(18)
    sys_llr, par_llr, tail_sys, tail_par, apriori = random_frame(rng, k=32)
    ext, post = bcjr_decode(sys_llr, par_llr, tail_sys, tail_par, apriori)
    assert np.allclose(ext, np.clip(post - sys_llr - apriori, -LLR_SAT, LLR_SAT))
    assert np.abs(ext).max() <= LLR_SAT


def test_saturated_clean_input_decodes_hard():
    rng = np.random.default_rng(19)
    bits = rng.integers(0, 2, size=40, dtype=np.uint8)
    parity, tsys, tpar = kernels.rsc_encode(
        bits, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
    )
    to_llr = lambda b: LLR_SAT * (1.0 - 2.0 * b.astype(float))
    _, post = bcjr_decode(
        to_llr(bits), to_llr(parity), to_llr(tsys), to_llr(tpar), np.zeros(40)
    )
    assert np.array_equal((post < 0).astype(np.uint8), bits)
    assert np.abs(post).min() > LLR_SAT  # trellis adds conviction


def test_apriori_shifts_posterior():
    rng = np.random.default_rng(20)
    sys_llr, par_llr, tail_sys, tail_par, _ = random_frame(rng, k=8)
    zero = np.zeros(8)
    strong = np.full(8, 30.0)
    _, post0 = bcjr_decode(sys_llr, par_llr, tail_sys, tail_par, zero)
    _, post1 = bcjr_decode(sys_llr, par_llr, tail_sys, tail_par, strong)
    assert np.all(post1 > post0)

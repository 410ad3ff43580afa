"""Mutual information machinery and threshold search.

The J oracle integrates the defining expectation directly with adaptive
quadrature: J(sigma) = 1 - E[log2(1 + exp(-x))] for
x ~ N(sigma^2/2, sigma^2). The implementation under test uses fixed
Gauss-Hermite nodes and must agree to well below the curve-noise floor.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from icturbo.channel import snr_db_to_sigma_tilde
from icturbo.exit_chart import (
    IA_GRID,
    ExitCurve,
    MotherExitFamily,
    decoding_threshold,
    exit_ic,
    exit_rep,
    generate_mother_exit,
    j_function,
    j_inverse,
    tunnel_open,
)
from icturbo.rate_matching import repetition_profile


def j_oracle(sigma: float) -> float:
    if sigma == 0:
        return 0.0
    mean, var = sigma * sigma / 2.0, sigma * sigma

    def integrand(x):
        return (
            math.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
            * math.log2(1.0 + math.exp(-x))
        )

    lo, hi = mean - 40 * sigma, mean + 40 * sigma
    val, _ = integrate.quad(integrand, lo, hi, limit=400)
    return 1.0 - val


@pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0, 1.6, 3.0, 8.0])
def test_j_matches_quadrature(sigma):
    assert j_function(sigma) == pytest.approx(j_oracle(sigma), abs=1e-6)


def test_j_shape():
    assert j_function(0.0) == 0.0
    grid = np.linspace(0.01, 12, 300)
    vals = j_function(grid)
    assert np.all(np.diff(vals) > 0)
    assert 0 < vals[0] < vals[-1] < 1
    assert j_function(40.0) == pytest.approx(1.0, abs=1e-9)


def test_j_inverse_roundtrip():
    # above sigma ~ 9 the float64 value of J saturates to exactly 1
    for sigma in np.geomspace(0.01, 8, 25):
        assert j_inverse(float(j_function(sigma))) == pytest.approx(sigma, rel=1e-5)
    assert j_inverse(0.0) == 0.0


def test_j_inverse_domain():
    with pytest.raises(ValueError):
        j_inverse(1.0)
    with pytest.raises(ValueError):
        j_inverse(-0.01)


def test_curve_interpolation_and_inverse():
    ia = np.linspace(0, 1, 11)
    curve = ExitCurve(1.0, ia, ia ** 2)
    assert curve(0.5) == pytest.approx(0.25)
    assert curve([0.0, 1.0]) == pytest.approx([0.0, 1.0])
    assert curve.inverse(0.25) == pytest.approx(0.5, abs=1e-6)


def test_tunnel_detection_on_synthetic_curves():
    ia = np.linspace(0, 1, 101)
    open_curve = ExitCurve(1.0, ia, np.clip(ia + 0.05, 0, 1))
    pinched = ExitCurve(1.0, ia, ia)
    assert tunnel_open(open_curve)
    assert not tunnel_open(pinched)


def test_mother_curve_determinism_and_shape():
    a = generate_mother_exit(1.2, samples_per_point=3000, frame_len=600, seed=4)
    b = generate_mother_exit(1.2, samples_per_point=3000, frame_len=600, seed=4)
    assert np.array_equal(a.i_e, b.i_e)
    assert np.all(np.diff(a.i_e) >= 0)  # isotonic by construction
    assert a.i_e[0] >= 0 and a.i_e[-1] <= 1
    assert a.i_e[-1] > 0.95  # perfect priors nearly close the chart


def test_family_interpolates_between_nodes():
    fam = MotherExitFamily(samples_per_point=3000, frame_len=600, seed=4)
    lo = fam.curve_at(1.20)
    hi = fam.curve_at(1.25)
    mid = fam.curve_at(1.225)
    assert np.allclose(mid.i_e, 0.5 * (lo.i_e + hi.i_e))


def test_exit_rep_is_a_channel_remap():
    """Repetition only changes the equivalent channel quality."""
    fam = MotherExitFamily(samples_per_point=3000, frame_len=600, seed=4)
    rate, sigma = 1 / 5, 1.1
    prof = repetition_profile(rate)
    mix = prof.p_low * j_function(math.sqrt(prof.psi) * sigma) + prof.p_high * j_function(
        math.sqrt(prof.psi + 1) * sigma
    )
    expected = fam.curve_at(j_inverse(mix))
    got = exit_rep(fam, rate, sigma)
    assert np.allclose(got.i_e, expected.i_e)


def test_exit_ic_lifts_the_abscissa():
    fam = MotherExitFamily(samples_per_point=3000, frame_len=600, seed=4)
    f, sigma = 0.25, 1.3
    mother = fam.curve_at(sigma)
    got = exit_ic(fam, f, sigma)
    assert np.allclose(got.i_e, mother(IA_GRID + f * (1 - IA_GRID)))
    # known bits can only help
    assert np.all(got.i_e >= mother.i_e - 1e-12)
    with pytest.raises(ValueError):
        exit_ic(fam, 1.0, sigma)


def test_threshold_bisection_on_synthetic_family():
    ia = np.linspace(0, 1, 101)

    def builder(snr_db):
        lift = 0.02 * (snr_db + 5.0)  # tunnel opens exactly at -5 dB
        return ExitCurve(1.0, ia, np.clip(ia + lift, 0.0, 1.0))

    res = decoding_threshold(builder, -7.0, -3.0, tol_db=0.01)
    assert res.snr_db == pytest.approx(-5.0, abs=0.08)
    assert res.bracket_hi_db - res.bracket_lo_db <= 0.01 + 1e-12
    assert res.evaluations > 0


def test_threshold_requires_straddling_bracket():
    ia = np.linspace(0, 1, 101)
    always_open = lambda snr: ExitCurve(1.0, ia, np.clip(ia + 0.1, 0, 1))
    always_shut = lambda snr: ExitCurve(1.0, ia, ia)
    with pytest.raises(ValueError):
        decoding_threshold(always_open, -7.0, -3.0)
    with pytest.raises(ValueError):
        decoding_threshold(always_shut, -7.0, -3.0)


def test_sigma_tilde_bridges_snr():
    assert snr_db_to_sigma_tilde(-5.0) == pytest.approx(math.sqrt(8 * 10 ** -0.5), rel=1e-12)

"""EXIT transfer curves and decoding thresholds for the constituent code.

The mother curve F(I_A, sigma_ch) of the 8-state constituent is measured
by Monte Carlo: frames with Gaussian-consistent channel and a priori
LLRs run through one log-MAP pass, and the extrinsic information is
estimated with the averaging estimator. Everything else is built from F:

  repetition at rate R < 1/3:  F_REP(I, s) = F(I, s') with
      s' = Jinv(p_low * J(sqrt(Psi) s) + p_high * J(sqrt(Psi+1) s)),
  coupling with dummy fraction f = 2D/K:  F_IC(I, s) = F(I + f(1-I), s),

where J(sigma) = 1 - E[log2(1 + exp(-eps))], eps ~ N(sigma^2/2, sigma^2),
maps the std of a consistent Gaussian LLR to its mutual information.
Both constituent curves are identical, so the iterative decoder converges
exactly when the curve clears its own mirror image about the diagonal,
and the decoding threshold is the SNR where that tunnel first opens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .channel import llr_mutual_information, snr_db_to_sigma_tilde
from .rate_matching import apply_repetition, chase_combine, repetition_profile
from .turbo import LLR_SAT, bcjr_decode

IA_GRID = np.round(np.arange(0.0, 1.0001, 0.02), 10)
SIGMA_GRID_STEP = 0.05
_EXIT_STREAM = 0xE817

# ============================================================
# The J function and its inverse
# ============================================================

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(96)


def j_function(sigma):
    """Mutual information of a consistent Gaussian LLR with std sigma.

    Gauss-Hermite quadrature of 1 - E[log2(1 + exp(-eps))] with
    eps ~ N(sigma^2/2, sigma^2); 96 nodes hold the error well below 1e-6
    over the whole useful range. Vectorised over sigma.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    scalar = sigma.ndim == 0
    sigma = np.atleast_1d(sigma)
    if (sigma < 0).any():
        raise ValueError("sigma must be non-negative")
    eps = sigma[:, None] ** 2 / 2.0 + math.sqrt(2.0) * sigma[:, None] * _GH_NODES[None, :]
    vals = np.logaddexp(0.0, -eps) / math.log(2.0)
    out = 1.0 - (vals @ _GH_WEIGHTS) / math.sqrt(math.pi)
    out = np.clip(out, 0.0, 1.0)
    out[sigma == 0.0] = 0.0
    return float(out[0]) if scalar else out


def j_inverse(i: float) -> float:
    """LLR std achieving mutual information i, for i in [0, 1)."""
    if not 0.0 <= i < 1.0:
        raise ValueError("j_inverse is defined on [0, 1)")
    if i == 0.0:
        return 0.0
    return float(brentq(lambda s: j_function(s) - i, 1e-9, 80.0, xtol=1e-13))


# ============================================================
# Curves
# ============================================================


@dataclass(frozen=True)
class ExitCurve:
    """I_E over a fixed I_A grid at one channel-LLR std (piecewise linear)."""

    sigma_ch_tilde: float
    i_a: np.ndarray
    i_e: np.ndarray

    def __call__(self, ia):
        return np.interp(ia, self.i_a, self.i_e)

    def inverse(self, ie):
        """Abscissa of the mirrored curve; needs i_e non-decreasing."""
        ramp = 1e-12 * np.arange(self.i_e.size)
        return np.interp(ie, self.i_e + ramp, self.i_a)


def _isotonic(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators smoothing, non-decreasing, equal weights."""
    vals = list(y.astype(np.float64))
    counts = [1] * len(vals)
    out_vals, out_counts = [], []
    for v, c in zip(vals, counts):
        out_vals.append(v)
        out_counts.append(c)
        while len(out_vals) > 1 and out_vals[-2] > out_vals[-1]:
            v2, c2 = out_vals.pop(), out_counts.pop()
            v1, c1 = out_vals.pop(), out_counts.pop()
            out_vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            out_counts.append(c1 + c2)
    return np.repeat(out_vals, out_counts)


def _gaussian_llr(bits: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Consistent Gaussian LLRs: mean (1-2b) sigma^2/2, variance sigma^2."""
    signs = 1.0 - 2.0 * bits.astype(np.float64)
    if sigma == 0.0:
        return np.zeros_like(signs)
    return signs * sigma * sigma / 2.0 + sigma * rng.standard_normal(bits.size)


def _perfect_llr(bits: np.ndarray) -> np.ndarray:
    return (1.0 - 2.0 * bits.astype(np.float64)) * LLR_SAT


def _measure_point(make_frame, samples: int, frame_len: int) -> float:
    exts, bits = [], []
    total = 0
    while total < samples:
        u, ext = make_frame()
        exts.append(ext)
        bits.append(u)
        total += u.size
    return llr_mutual_information(np.concatenate(exts), np.concatenate(bits))


def generate_mother_exit(
    sigma_ch_tilde: float,
    ia_grid: np.ndarray = IA_GRID,
    samples_per_point: int = 100_000,
    frame_len: int = 5000,
    seed: int = 0,
) -> ExitCurve:
    """Monte Carlo EXIT curve of one terminated constituent decoder.

    The random draws depend only on (seed, grid index), not on sigma, so
    curves generated for different channel qualities share their noise
    and interpolate smoothly between grid nodes.
    """
    if sigma_ch_tilde < 0:
        raise ValueError("sigma_ch_tilde must be non-negative")
    i_e = np.empty(ia_grid.size)
    for idx, ia in enumerate(ia_grid):
        rng = np.random.default_rng(np.random.SeedSequence([_EXIT_STREAM, seed, idx]))
        sigma_a = j_inverse(min(ia, 1.0 - 1e-9)) if ia < 1.0 else None

        def make_frame():
            u = rng.integers(0, 2, frame_len, dtype=np.uint8)
            par, tail_sys, tail_par = kernels.rsc_encode(
                u, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
            )
            lch_sys = _gaussian_llr(u, sigma_ch_tilde, rng)
            lch_par = _gaussian_llr(par, sigma_ch_tilde, rng)
            lt_sys = _gaussian_llr(tail_sys, sigma_ch_tilde, rng)
            lt_par = _gaussian_llr(tail_par, sigma_ch_tilde, rng)
            la = _perfect_llr(u) if sigma_a is None else _gaussian_llr(u, sigma_a, rng)
            ext, _ = bcjr_decode(lch_sys, lch_par, lt_sys, lt_par, la)
            return u, ext

        i_e[idx] = _measure_point(make_frame, samples_per_point, frame_len)
    return ExitCurve(sigma_ch_tilde, ia_grid.copy(), _isotonic(i_e))


class MotherExitFamily:
    """Lazy cache of mother curves on a sigma grid, interpolated between nodes.

    Node curves share random draws (common random numbers), so the
    point-wise linear interpolation in sigma is smooth and thresholds do
    not jitter with the node placement.
    """

    def __init__(
        self,
        step: float = SIGMA_GRID_STEP,
        ia_grid: np.ndarray = IA_GRID,
        samples_per_point: int = 100_000,
        frame_len: int = 5000,
        seed: int = 0,
    ):
        self.step = step
        self.ia_grid = ia_grid
        self.samples_per_point = samples_per_point
        self.frame_len = frame_len
        self.seed = seed
        self._nodes: dict[int, ExitCurve] = {}

    def _node(self, idx: int) -> ExitCurve:
        curve = self._nodes.get(idx)
        if curve is None:
            curve = generate_mother_exit(
                idx * self.step,
                self.ia_grid,
                self.samples_per_point,
                self.frame_len,
                self.seed,
            )
            self._nodes[idx] = curve
        return curve

    def curve_at(self, sigma_ch_tilde: float) -> ExitCurve:
        if sigma_ch_tilde < 0:
            raise ValueError("sigma_ch_tilde must be non-negative")
        pos = sigma_ch_tilde / self.step
        lo = int(math.floor(pos))
        w = pos - lo
        if w < 1e-12:
            node = self._node(lo)
            return ExitCurve(sigma_ch_tilde, node.i_a, node.i_e)
        lo_curve, hi_curve = self._node(lo), self._node(lo + 1)
        i_e = (1.0 - w) * lo_curve.i_e + w * hi_curve.i_e
        return ExitCurve(sigma_ch_tilde, self.ia_grid.copy(), i_e)


def exit_rep(family: MotherExitFamily, rate: float, sigma_ch_tilde: float) -> ExitCurve:
    """Constituent curve under repetition to a rate below 1/3.

    Chase combining turns the channel into a two-component Gaussian
    mixture; the J-domain average maps it onto a single equivalent std.
    """
    prof = repetition_profile(rate)
    j_mix = prof.p_low * j_function(math.sqrt(prof.psi) * sigma_ch_tilde) + prof.p_high * j_function(
        math.sqrt(prof.psi + 1) * sigma_ch_tilde
    )
    sigma_eff = j_inverse(min(j_mix, 1.0 - 1e-12))
    curve = family.curve_at(sigma_eff)
    return ExitCurve(sigma_ch_tilde, curve.i_a, curve.i_e)


def exit_ic(family: MotherExitFamily, dummy_fraction: float, sigma_ch_tilde: float) -> ExitCurve:
    """Constituent curve of a coupled block with fraction f = 2D/K of its
    systematic bits perfectly known, which lifts the a priori abscissa to
    I + f(1 - I)."""
    if not 0.0 <= dummy_fraction < 1.0:
        raise ValueError("dummy_fraction must lie in [0, 1)")
    mother = family.curve_at(sigma_ch_tilde)
    ia = mother.i_a
    i_e = mother(ia + dummy_fraction * (1.0 - ia))
    return ExitCurve(sigma_ch_tilde, ia.copy(), i_e)


# ============================================================
# Thresholds
# ============================================================


def tunnel_open(curve: ExitCurve, delta: float = 1e-3, delta_end: float = 1e-3) -> bool:
    """True when the curve clears its mirror by delta on the whole grid
    short of the (1,1) corner."""
    sel = curve.i_a < 1.0 - delta_end
    return bool(np.all(curve.i_e[sel] > curve.inverse(curve.i_a[sel]) + delta))


@dataclass(frozen=True)
class ThresholdResult:
    snr_db: float
    bracket_lo_db: float
    bracket_hi_db: float
    tol_db: float
    evaluations: int


def decoding_threshold(
    curve_builder,
    lo_db: float,
    hi_db: float,
    tol_db: float = 0.02,
    delta: float = 1e-3,
    delta_end: float = 1e-3,
) -> ThresholdResult:
    """Bisect for the lowest SNR whose tunnel is open.

    curve_builder maps an SNR in dB to an ExitCurve. The bracket must
    straddle the transition: closed at lo_db, open at hi_db.
    """
    if hi_db <= lo_db:
        raise ValueError("need lo_db < hi_db")
    evals = 2
    if tunnel_open(curve_builder(lo_db), delta, delta_end):
        raise ValueError(f"tunnel already open at {lo_db} dB; lower the bracket")
    if not tunnel_open(curve_builder(hi_db), delta, delta_end):
        raise ValueError(f"tunnel never opens up to {hi_db} dB; raise the bracket")
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        evals += 1
        if tunnel_open(curve_builder(mid), delta, delta_end):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, tol_db, evals)


def lte_threshold(family: MotherExitFamily, rate: float, lo_db: float, hi_db: float, **kw) -> ThresholdResult:
    return decoding_threshold(
        lambda snr: exit_rep(family, rate, snr_db_to_sigma_tilde(snr)), lo_db, hi_db, **kw
    )


def ic_threshold(family: MotherExitFamily, dummy_fraction: float, lo_db: float, hi_db: float, **kw) -> ThresholdResult:
    return decoding_threshold(
        lambda snr: exit_ic(family, dummy_fraction, snr_db_to_sigma_tilde(snr)), lo_db, hi_db, **kw
    )


# ============================================================
# Direct Monte Carlo counterparts (independent of the J-domain shortcut)
# ============================================================


def mc_exit_repetition(
    rate: float,
    sigma_ch_tilde: float,
    ia_grid: np.ndarray = IA_GRID,
    samples_per_point: int = 100_000,
    frame_len: int = 5000,
    seed: int = 1,
) -> ExitCurve:
    """EXIT curve with the repetition actually performed: every coded bit
    is repeated per the profile (random placement), sent over the Gaussian
    LLR channel and Chase-combined before the log-MAP pass."""
    prof = repetition_profile(rate)
    i_e = np.empty(ia_grid.size)
    for idx, ia in enumerate(ia_grid):
        rng = np.random.default_rng(np.random.SeedSequence([_EXIT_STREAM, seed, 1, idx]))
        sigma_a = j_inverse(min(ia, 1.0 - 1e-9)) if ia < 1.0 else None

        def make_frame():
            u = rng.integers(0, 2, frame_len, dtype=np.uint8)
            par, tail_sys, tail_par = kernels.rsc_encode(
                u, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
            )
            coded = np.concatenate([u, par])
            tx, rep_map = apply_repetition(coded, prof, mode="random", rng=rng)
            llr = _gaussian_llr(tx, sigma_ch_tilde, rng)
            combined = chase_combine(llr, rep_map, coded.size)
            lch_sys, lch_par = combined[:frame_len], combined[frame_len:]
            lt_sys = _gaussian_llr(tail_sys, sigma_ch_tilde, rng)
            lt_par = _gaussian_llr(tail_par, sigma_ch_tilde, rng)
            la = _perfect_llr(u) if sigma_a is None else _gaussian_llr(u, sigma_a, rng)
            ext, _ = bcjr_decode(lch_sys, lch_par, lt_sys, lt_par, la)
            return u, ext

        i_e[idx] = _measure_point(make_frame, samples_per_point, frame_len)
    return ExitCurve(sigma_ch_tilde, ia_grid.copy(), _isotonic(i_e))


def mc_exit_coupled(
    dummy_fraction: float,
    sigma_ch_tilde: float,
    ia_grid: np.ndarray = IA_GRID,
    samples_per_point: int = 100_000,
    frame_len: int = 5000,
    seed: int = 2,
) -> ExitCurve:
    """EXIT curve with known bits actually inserted: a random fraction of
    systematic positions carries perfect (saturated) priors on top of the
    usual channel LLRs, the rest receives the Gaussian a priori.

    Every shared segment of a coupled chain is transmitted exactly once
    and its LLR routed to both hosts, so known positions keep their
    channel observations here; only the chain-end dummies lack them,
    a boundary effect this per-block model does not carry.
    """
    if not 0.0 <= dummy_fraction < 1.0:
        raise ValueError("dummy_fraction must lie in [0, 1)")
    n_known = int(round(dummy_fraction * frame_len))
    i_e = np.empty(ia_grid.size)
    for idx, ia in enumerate(ia_grid):
        rng = np.random.default_rng(np.random.SeedSequence([_EXIT_STREAM, seed, 2, idx]))
        sigma_a = j_inverse(min(ia, 1.0 - 1e-9)) if ia < 1.0 else None

        def make_frame():
            u = rng.integers(0, 2, frame_len, dtype=np.uint8)
            par, tail_sys, tail_par = kernels.rsc_encode(
                u, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
            )
            known = rng.choice(frame_len, size=n_known, replace=False)
            lch_sys = _gaussian_llr(u, sigma_ch_tilde, rng)
            lch_par = _gaussian_llr(par, sigma_ch_tilde, rng)
            lt_sys = _gaussian_llr(tail_sys, sigma_ch_tilde, rng)
            lt_par = _gaussian_llr(tail_par, sigma_ch_tilde, rng)
            la = _perfect_llr(u) if sigma_a is None else _gaussian_llr(u, sigma_a, rng)
            la[known] = _perfect_llr(u[known])
            ext, _ = bcjr_decode(lch_sys, lch_par, lt_sys, lt_par, la)
            return u, ext

        i_e[idx] = _measure_point(make_frame, samples_per_point, frame_len)
    return ExitCurve(sigma_ch_tilde, ia_grid.copy(), _isotonic(i_e))

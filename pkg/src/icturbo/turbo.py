"""Rate-1/3 LTE Turbo encoding and iterative log-MAP decoding.

The code parallel-concatenates two identical 8-state recursive systematic
convolutional encoders (feedback 1+D^2+D^3, feedforward 1+D+D^3, octal
13/15) through a quadratic permutation polynomial interleaver. Both
constituents are trellis-terminated, which appends 12 tail bits to the
3K coded bits.

All LLRs are natural-log, positive for bit 0, and saturated at +-LLR_SAT
when crossing module boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels

LLR_SAT = 64.0

# ============================================================
# Trellis and interleaver descriptions
# ============================================================


@dataclass(frozen=True)
class TrellisSpec:
    """Binary RSC constituent: octal generators, feedback first."""

    memory: int = 3
    feedback_octal: int = 0o13
    feedforward_octal: int = 0o15

    @property
    def num_states(self) -> int:
        return 1 << self.memory


LTE_TRELLIS = TrellisSpec()

# QPP parameters (f1, f2) per block length, pi(i) = (f1*i + f2*i^2) mod K.
QPP_PARAMS = {
    40: (3, 10), 48: (7, 12), 56: (19, 42), 64: (7, 16), 72: (7, 18),
    80: (11, 20), 88: (5, 22), 96: (11, 24), 104: (7, 26), 112: (41, 84),
    120: (103, 90), 128: (15, 32), 136: (9, 34), 144: (17, 108), 152: (9, 38),
    160: (21, 120), 168: (101, 84), 176: (21, 44), 184: (57, 46), 192: (23, 48),
    200: (13, 50), 208: (27, 52), 216: (11, 36), 224: (27, 56), 232: (85, 58),
    240: (29, 60), 248: (33, 62), 256: (15, 32), 264: (17, 198), 272: (33, 68),
    280: (103, 210), 288: (19, 36), 296: (19, 74), 304: (37, 76), 312: (19, 78),
    320: (21, 120), 328: (21, 82), 336: (115, 84), 344: (193, 86), 352: (21, 44),
    360: (133, 90), 368: (81, 46), 376: (45, 94), 384: (23, 48), 392: (243, 98),
    400: (151, 40), 408: (155, 102), 416: (25, 52), 424: (51, 106), 432: (47, 72),
    440: (91, 110), 448: (29, 168), 456: (29, 114), 464: (247, 58), 472: (29, 118),
    480: (89, 180), 488: (91, 122), 496: (157, 62), 504: (55, 84), 512: (31, 64),
    528: (17, 66), 544: (35, 68), 560: (227, 420), 576: (65, 96), 592: (19, 74),
    608: (37, 76), 624: (41, 234), 640: (39, 80), 656: (185, 82), 672: (43, 252),
    688: (21, 86), 704: (155, 44), 720: (79, 120), 736: (139, 92), 752: (23, 94),
    768: (217, 48), 784: (25, 98), 800: (17, 80), 816: (127, 102), 832: (25, 52),
    848: (239, 106), 864: (17, 48), 880: (137, 110), 896: (215, 112), 912: (29, 114),
    928: (15, 58), 944: (147, 118), 960: (29, 60), 976: (59, 122), 992: (65, 124),
    1008: (55, 84), 1024: (31, 64), 1056: (17, 66), 1088: (171, 204), 1120: (67, 140),
    1152: (35, 72), 1184: (19, 74), 1216: (39, 76), 1248: (19, 78), 1280: (199, 240),
    1312: (21, 82), 1344: (211, 252), 1376: (21, 86), 1408: (43, 88), 1440: (149, 60),
    1472: (45, 92), 1504: (49, 846), 1536: (71, 48), 1568: (13, 28), 1600: (17, 80),
    1632: (25, 102), 1664: (183, 104), 1696: (55, 954), 1728: (127, 96), 1760: (27, 110),
    1792: (29, 112), 1824: (29, 114), 1856: (57, 116), 1888: (45, 354), 1920: (31, 120),
    1952: (59, 610), 1984: (185, 124), 2016: (113, 420), 2048: (31, 64), 2112: (17, 66),
    2176: (171, 136), 2240: (209, 420), 2304: (253, 216), 2368: (367, 444), 2432: (265, 456),
    2496: (181, 468), 2560: (39, 80), 2624: (27, 164), 2688: (127, 504), 2752: (143, 172),
    2816: (43, 88), 2880: (29, 300), 2944: (45, 92), 3008: (157, 188), 3072: (47, 96),
    3136: (13, 28), 3200: (111, 240), 3264: (443, 204), 3328: (51, 104), 3392: (51, 212),
    3456: (451, 192), 3520: (257, 220), 3584: (57, 336), 3648: (313, 228), 3712: (271, 232),
    3776: (179, 236), 3840: (331, 120), 3904: (363, 244), 3968: (375, 248), 4032: (127, 168),
    4096: (31, 64), 4160: (33, 130), 4224: (43, 264), 4288: (33, 134), 4352: (477, 408),
    4416: (35, 138), 4480: (233, 280), 4544: (357, 142), 4608: (337, 480), 4672: (37, 146),
    4736: (71, 444), 4800: (71, 120), 4864: (37, 152), 4928: (39, 462), 4992: (127, 234),
    5056: (39, 158), 5120: (39, 80), 5184: (31, 96), 5248: (113, 902), 5312: (41, 166),
    5376: (251, 336), 5440: (43, 170), 5504: (21, 86), 5568: (43, 174), 5632: (45, 176),
    5696: (45, 178), 5760: (161, 120), 5824: (89, 182), 5888: (323, 184), 5952: (47, 186),
    6016: (23, 94), 6080: (47, 190), 6144: (263, 480),
}

VALID_CB_LENGTHS = tuple(sorted(QPP_PARAMS))


@dataclass(frozen=True)
class InterleaverSpec:
    """Length-K permutation: interleaved[j] = natural[perm[j]]."""

    block_len: int
    perm: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.perm.shape != (self.block_len,):
            raise ValueError("permutation length must equal the block length")
        if np.bincount(self.perm, minlength=self.block_len).max(initial=0) != 1:
            raise ValueError("permutation must be a bijection")
        inv = np.empty(self.block_len, dtype=np.int64)
        inv[self.perm] = np.arange(self.block_len)
        object.__setattr__(self, "inverse", inv)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x[self.perm]

    def invert(self, x: np.ndarray) -> np.ndarray:
        return x[self.inverse]


def qpp_interleaver(k: int, *, allow_fallback: bool = False, fallback_seed: int = 0) -> InterleaverSpec:
    """Standard QPP permutation for K, or a seeded random one if allowed.

    The fallback exists only for block lengths outside the standard table
    (toy trials); it must be requested explicitly.
    """
    if k in QPP_PARAMS:
        f1, f2 = QPP_PARAMS[k]
        i = np.arange(k, dtype=np.int64)
        perm = (f1 * i + f2 * i * i) % k
        return InterleaverSpec(k, perm)
    if not allow_fallback:
        raise ValueError(f"no QPP parameters for K={k}; pass allow_fallback=True for a random permutation")
    rng = np.random.default_rng(np.random.SeedSequence([0x1C, k, fallback_seed]))
    return InterleaverSpec(k, rng.permutation(k).astype(np.int64))


# ============================================================
# Encoding
# ============================================================


@dataclass
class TurboCodeword:
    """3K+12 coded bits: systematic, two parities, and 12 tail bits.

    tail layout: [sys1(3), par1(3), sys2(3), par2(3)], first constituent
    then second, each contributing its own termination inputs and parities.
    """

    systematic: np.ndarray
    parity1: np.ndarray
    parity2: np.ndarray
    tail: np.ndarray

    @property
    def block_len(self) -> int:
        return self.systematic.size


def _check_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or (arr.size and not np.isin(arr, (0, 1)).all()):
        raise ValueError("code block must be a one-dimensional 0/1 sequence")
    return arr.astype(np.uint8)


def cc_encode(bits, initial_state: int = 0) -> tuple[np.ndarray, int]:
    """Single constituent encode without termination; returns (parity, final state)."""
    arr = _check_bits(bits)
    state = initial_state
    parity = np.empty(arr.size, dtype=np.uint8)
    for k, u in enumerate(arr):
        parity[k] = kernels.PARITY_BIT[state, u]
        state = kernels.NEXT_STATE[state, u]
    return parity, state


def turbo_encode(cb, interleaver: InterleaverSpec) -> TurboCodeword:
    """Encode one code block with both constituents and terminate each."""
    bits = _check_bits(cb)
    if bits.size != interleaver.block_len:
        raise ValueError("code block length does not match the interleaver")
    par1, tail_sys1, tail_par1 = kernels.rsc_encode(
        bits, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
    )
    par2, tail_sys2, tail_par2 = kernels.rsc_encode(
        interleaver.apply(bits), kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
    )
    tail = np.concatenate([tail_sys1, tail_par1, tail_sys2, tail_par2])
    return TurboCodeword(bits.copy(), par1, par2, tail)


# ============================================================
# Decoding
# ============================================================


@dataclass
class LlrFrame:
    """Receiver-side view of one code block, all entries natural-log LLRs.

    apriori_llr carries externally supplied knowledge about systematic
    bits (coupling messages, known dummy bits); it is added to the
    systematic input of both constituent decoders and excluded again from
    every extrinsic output. tail_llr follows the TurboCodeword tail layout.
    """

    systematic_llr: np.ndarray
    parity1_llr: np.ndarray
    parity2_llr: np.ndarray
    tail_llr: np.ndarray
    apriori_llr: np.ndarray

    @classmethod
    def zeros(cls, k: int) -> "LlrFrame":
        return cls(np.zeros(k), np.zeros(k), np.zeros(k), np.zeros(12), np.zeros(k))

    @property
    def block_len(self) -> int:
        return self.systematic_llr.size


def saturate(llr: np.ndarray) -> np.ndarray:
    return np.clip(llr, -LLR_SAT, LLR_SAT)


def bcjr_decode(sys_llr, par_llr, tail_sys_llr, tail_par_llr, apriori_llr) -> tuple[np.ndarray, np.ndarray]:
    """One log-MAP pass over a terminated constituent.

    Returns (extrinsic, posterior) for the free input bits; the extrinsic
    strips both the systematic channel term and the a priori term.
    """
    sys_llr = np.asarray(sys_llr, dtype=np.float64)
    apriori_llr = np.asarray(apriori_llr, dtype=np.float64)
    n = sys_llr.size
    sys_in = np.concatenate([sys_llr + apriori_llr, tail_sys_llr])
    par_in = np.concatenate([np.asarray(par_llr, dtype=np.float64), tail_par_llr])
    post = kernels.bcjr_posterior(
        sys_in, par_in, n, kernels.NEXT_STATE, kernels.PARITY_BIT, kernels.TERM_INPUT
    )
    ext = saturate(post - sys_llr - apriori_llr)
    return ext, post


@dataclass
class TurboDecodeResult:
    estimate: np.ndarray
    extrinsic: np.ndarray
    extrinsic_pre: np.ndarray | None
    extrinsic_post: np.ndarray | None
    iterations: int
    stopped_early: bool


def turbo_decode(
    frame: LlrFrame,
    interleaver: InterleaverSpec,
    max_iters: int,
    stop: Callable[[np.ndarray], bool] | None = None,
    coupled_positions: tuple[np.ndarray, np.ndarray] | None = None,
) -> TurboDecodeResult:
    """Iterative two-constituent log-MAP decode of one code block.

    Each iteration runs constituent 1 then constituent 2, exchanging
    saturated extrinsics. After every iteration the hard decision is
    tested with `stop` (typically a CB CRC check); decoding halts on the
    first success. The returned extrinsic is the combined trellis
    information e1 + e2 about each systematic bit, which excludes both the
    channel observation and frame.apriori_llr, so it is safe to hand to a
    neighbouring block as a priori knowledge.
    """
    k = frame.block_len
    if interleaver.block_len != k:
        raise ValueError("interleaver length does not match the frame")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    ls = frame.systematic_llr + frame.apriori_llr
    tail = frame.tail_llr
    e1 = np.zeros(k)
    e2d = np.zeros(k)
    estimate = np.zeros(k, dtype=np.uint8)
    stopped = False
    it = 0
    for it in range(1, max_iters + 1):
        e1, _ = bcjr_decode(ls, frame.parity1_llr, tail[0:3], tail[3:6], e2d)
        e2, _ = bcjr_decode(
            interleaver.apply(ls),
            frame.parity2_llr,
            tail[6:9],
            tail[9:12],
            interleaver.apply(e1),
        )
        e2d = interleaver.invert(e2)
        posterior = ls + e1 + e2d
        estimate = (posterior < 0).astype(np.uint8)
        if stop is not None and stop(estimate):
            stopped = True
            break
    extrinsic = saturate(e1 + e2d)
    ext_pre = ext_post = None
    if coupled_positions is not None:
        pre_idx, post_idx = coupled_positions
        ext_pre = extrinsic[pre_idx].copy()
        ext_post = extrinsic[post_idx].copy()
    return TurboDecodeResult(estimate, extrinsic, ext_pre, ext_post, it, stopped)

"""Information-coupled segmentation of a transport block into Turbo code blocks.

A transport block is split into N length-K code blocks that overlap by D
information bits per boundary: the last D fresh bits of block n are also
embedded in block n+1, so each boundary carries a shared segment that is
encoded twice but transmitted once. The chain is closed with D known
zero (dummy) bits at the head of block 1 and the tail of block N. With a
mother rate of 1/3 the overall rate becomes

    R = (N(K-D) - D) / (N(3K-D) - D),

strictly below 1/3, without any repetition. Counting both CRCs inside
the K and L budgets, the information budget satisfies
L + padding = N*K - (N+1)*D, and the actual transport-block bit string
(with its trailing 24-bit CRC) is 24*N shorter, one CB CRC per block.

Inside a block the D shared-in positions (pre), D shared-out positions
(post) and 24 CRC positions are disjoint; pre and post slots are spread
nearly equally over the K-24 non-CRC slots, interleaved with each other,
so neither constituent decoder sees coupled bits clustered together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .crc import CRC24B, CRC_LEN, crc24_attach
from .turbo import LLR_SAT, LlrFrame, TurboCodeword, VALID_CB_LENGTHS

TAIL_LEN = 12


# ============================================================
# Parameters
# ============================================================


@dataclass(frozen=True)
class CodeParameters:
    """(N, K, D) plus the nominal transport-block length it serves.

    tb_len is the pre-padding information budget L, CRCs included;
    the bit string actually segmented is tb_len + padding - 24*n_cb long.
    """

    n_cb: int
    block_len: int
    coupling_len: int
    tb_len: int
    padding: int = 0

    def __post_init__(self):
        n, k, d = self.n_cb, self.block_len, self.coupling_len
        if n < 2:
            raise ValueError("coupling needs at least two code blocks")
        if k not in VALID_CB_LENGTHS:
            raise ValueError(f"K={k} is not a valid code block length")
        if d < 1:
            raise ValueError("coupling length must be positive")
        if 2 * d > k - CRC_LEN:
            raise ValueError("coupling length too large: pre and post segments must fit beside the CRC")
        if self.padding < 0 or self.padding > n:
            raise ValueError("padding must lie in [0, n_cb]")
        if self.tb_len + self.padding != self.info_budget:
            raise ValueError("tb_len + padding must equal N*K - (N+1)*D")
        if self.payload_len < 1:
            raise ValueError("no room for payload after CRC overhead")

    @property
    def info_budget(self) -> int:
        return self.n_cb * self.block_len - (self.n_cb + 1) * self.coupling_len

    @property
    def segmented_len(self) -> int:
        """Length of the padded TB bit string fed to segmentation."""
        return self.info_budget - CRC_LEN * self.n_cb

    @property
    def payload_len(self) -> int:
        return self.tb_len - CRC_LEN * self.n_cb - CRC_LEN

    @property
    def transmitted_count(self) -> int:
        """Coded bits on the air, tails excluded: N*3K - (N+1)*D."""
        return 3 * self.n_cb * self.block_len - (self.n_cb + 1) * self.coupling_len

    @property
    def rate_fraction(self) -> Fraction:
        return Fraction(self.info_budget, self.transmitted_count)

    @property
    def rate(self) -> float:
        return float(self.rate_fraction)


def effective_code_rate(n_cb: int, block_len: int, coupling_len: int) -> float:
    """Overall rate of the coupled code for a 1/3 mother code."""
    num = n_cb * (block_len - coupling_len) - coupling_len
    den = n_cb * (3 * block_len - coupling_len) - coupling_len
    return num / den


def solve_code_parameters(
    tb_len: int,
    rate: float,
    block_lengths: tuple[int, ...] = VALID_CB_LENGTHS,
    rate_tol: float = 5e-3,
) -> CodeParameters:
    """Smallest N (largest K) achieving the requested rate for tb_len.

    For each N the ideal block length is K = L(1-R) / (2NR); when no
    exact (K in the standard set, integer D) solution exists, the TB is
    zero-padded by at most N bits to make D integral and the candidate is
    accepted if its effective rate stays within rate_tol of the request.
    """
    if not 0.0 < rate < 1.0 / 3.0:
        raise ValueError("coupled rates must lie strictly between 0 and 1/3")
    if tb_len < 1:
        raise ValueError("tb_len must be positive")
    k_min = min(block_lengths)
    sorted_k = sorted(block_lengths)
    n = 2
    while True:
        k_target = tb_len * (1.0 - rate) / (2.0 * n * rate)
        if k_target < k_min / 2:
            raise ValueError(
                f"no feasible (N, K, D) for tb_len={tb_len}, rate={rate:.6f} within the padding budget"
            )
        near = sorted(sorted_k, key=lambda k: (abs(k - k_target), -k))[:2]
        best = None
        for k in near:
            pad = (n * k - tb_len) % (n + 1)
            d, rem = divmod(n * k - tb_len - pad, n + 1)
            if rem != 0 or d < 1 or 2 * d > k - CRC_LEN:
                continue
            r_eff = effective_code_rate(n, k, d)
            if abs(r_eff - rate) > rate_tol:
                continue
            cand = CodeParameters(n, k, d, tb_len, pad)
            if cand.payload_len < 1:
                continue
            key = (pad > 0, abs(r_eff - rate), pad)
            if best is None or key < best[0]:
                best = (key, cand)
        if best is not None:
            return best[1]
        n += 1


# ============================================================
# Per-block layout
# ============================================================


@dataclass(frozen=True)
class CbLayout:
    """Index sets partitioning the K slots of one code block.

    pre slots hold the segment shared with the previous block (dummy
    zeros for the first block); post slots hold the segment shared with
    the next block (dummy zeros for the last); CRC slots are the trailing
    24; everything else is fresh information.
    """

    index: int
    n_cb: int
    block_len: int
    pre_positions: np.ndarray
    post_positions: np.ndarray
    crc_positions: np.ndarray
    uncoupled_positions: np.ndarray

    @property
    def is_first(self) -> bool:
        return self.index == 0

    @property
    def is_last(self) -> bool:
        return self.index == self.n_cb - 1


def build_layouts(params: CodeParameters) -> list[CbLayout]:
    """Identical slot geometry for every block; only the head/tail roles differ.

    With info_len = K - 24 and step info_len / D >= 2, the sequences
    floor(j * info_len / D) and floor((2j+1) * info_len / (2D)) strictly
    interleave, giving disjoint nearly equally spaced pre and post sets.
    """
    k, d = params.block_len, params.coupling_len
    info_len = k - CRC_LEN
    j = np.arange(d, dtype=np.int64)
    pre = (j * info_len) // d
    post = ((2 * j + 1) * info_len) // (2 * d)
    crc = np.arange(info_len, k, dtype=np.int64)
    mask = np.ones(k, dtype=bool)
    mask[pre] = False
    mask[post] = False
    mask[crc] = False
    uncoupled = np.flatnonzero(mask)
    return [
        CbLayout(n, params.n_cb, k, pre, post, crc, uncoupled)
        for n in range(params.n_cb)
    ]


# ============================================================
# Segmentation and reassembly
# ============================================================


def segment_and_couple(tb_padded, params: CodeParameters) -> list[np.ndarray]:
    """Build the N code blocks, duplicating each shared segment into its
    two hosts and attaching a CRC24B over each block's first K-24 bits.

    tb_padded is the transport block with its TB CRC and padding zeros,
    of length params.segmented_len.
    """
    tb = np.asarray(tb_padded).astype(np.uint8)
    if tb.size != params.segmented_len:
        raise ValueError(f"expected {params.segmented_len} TB bits, got {tb.size}")
    layouts = build_layouts(params)
    k, d, n_cb = params.block_len, params.coupling_len, params.n_cb
    fresh_len = k - CRC_LEN - 2 * d
    cbs = []
    pos = 0
    carry = np.zeros(d, dtype=np.uint8)  # head dummy bits
    for lay in layouts:
        body = np.zeros(k - CRC_LEN, dtype=np.uint8)
        body[lay.pre_positions] = carry
        body[lay.uncoupled_positions] = tb[pos:pos + fresh_len]
        pos += fresh_len
        if not lay.is_last:
            carry = tb[pos:pos + d]
            pos += d
            body[lay.post_positions] = carry
        # last block: post slots keep their dummy zeros
        cbs.append(crc24_attach(body, CRC24B))
    if pos != tb.size:
        raise AssertionError("segmentation did not consume the whole transport block")
    return cbs


def reassemble(estimates, params: CodeParameters) -> np.ndarray:
    """Inverse of segment_and_couple: recover the TB (padding stripped).

    Shared segments are read from their first host (the post slots), so
    the two copies never have to be reconciled.
    """
    layouts = build_layouts(params)
    pieces = []
    for lay, est in zip(layouts, estimates):
        est = np.asarray(est)
        if est.size != params.block_len:
            raise ValueError("estimate length does not match the block length")
        pieces.append(est[lay.uncoupled_positions])
        if not lay.is_last:
            pieces.append(est[lay.post_positions])
    tb = np.concatenate(pieces).astype(np.uint8)
    if params.padding:
        tb = tb[: -params.padding]
    return tb


# ============================================================
# Transmission plan and LLR routing
# ============================================================


@dataclass
class TransmissionPlan:
    """Which coded bits of each block go on the air, and where the LLRs
    of shared segments must be copied back on reception.

    Per block the stream is [transmitted systematic, parity1, parity2,
    tail]; pre slots are never transmitted (their content flies in the
    previous block, or is a known dummy), and the last block's post slots
    are dummy as well.
    """

    params: CodeParameters
    sys_tx_positions: list[np.ndarray]
    post_stream_offsets: list[np.ndarray]
    block_offsets: np.ndarray
    total_symbols: int


def build_transmission_plan(params: CodeParameters) -> TransmissionPlan:
    layouts = build_layouts(params)
    k = params.block_len
    sys_tx, post_off, offsets = [], [], []
    offset = 0
    for lay in layouts:
        skip = np.ones(k, dtype=bool)
        skip[lay.pre_positions] = False
        if lay.is_last:
            skip[lay.post_positions] = False
        tx_pos = np.flatnonzero(skip)
        sys_tx.append(tx_pos)
        if not lay.is_last:
            # stream indices of this block's post slots, for routing into
            # the next block's pre slots
            post_off.append(offset + np.searchsorted(tx_pos, lay.post_positions))
        else:
            post_off.append(np.empty(0, dtype=np.int64))
        offsets.append(offset)
        offset += tx_pos.size + 2 * k + TAIL_LEN
    count_no_tail = offset - TAIL_LEN * params.n_cb
    if count_no_tail != params.transmitted_count:
        raise AssertionError("transmission plan disagrees with the rate identity")
    return TransmissionPlan(params, sys_tx, post_off, np.asarray(offsets), offset)


def select_transmitted_bits(codewords: list[TurboCodeword], plan: TransmissionPlan) -> np.ndarray:
    """Flatten the N codewords into the transmitted stream."""
    if len(codewords) != plan.params.n_cb:
        raise ValueError("wrong number of codewords for this plan")
    parts = []
    for cw, tx_pos in zip(codewords, plan.sys_tx_positions):
        if cw.block_len != plan.params.block_len:
            raise ValueError("codeword length does not match the plan")
        parts.extend([cw.systematic[tx_pos], cw.parity1, cw.parity2, cw.tail])
    out = np.concatenate(parts)
    if out.size != plan.total_symbols:
        raise AssertionError("transmitted stream length mismatch")
    return out


def route_channel_llrs(llr_stream, plan: TransmissionPlan) -> list[LlrFrame]:
    """Scatter demodulated LLRs back into per-block frames.

    The LLR of each shared segment appears twice, once at the post slots
    of its first host and once at the pre slots of the next block. Dummy
    slots get zero channel LLR and a saturated a priori (known zeros).
    Untransmitted slots otherwise stay at zero.
    """
    llrs = np.asarray(llr_stream, dtype=np.float64)
    if llrs.size != plan.total_symbols:
        raise ValueError(f"expected {plan.total_symbols} LLRs, got {llrs.size}")
    params = plan.params
    layouts = build_layouts(params)
    k = params.block_len
    frames = []
    for lay, tx_pos, offset in zip(layouts, plan.sys_tx_positions, plan.block_offsets):
        frame = LlrFrame.zeros(k)
        cursor = offset
        frame.systematic_llr[tx_pos] = llrs[cursor:cursor + tx_pos.size]
        cursor += tx_pos.size
        frame.parity1_llr[:] = llrs[cursor:cursor + k]
        cursor += k
        frame.parity2_llr[:] = llrs[cursor:cursor + k]
        cursor += k
        frame.tail_llr[:] = llrs[cursor:cursor + TAIL_LEN]
        if lay.is_first:
            frame.apriori_llr[lay.pre_positions] = LLR_SAT
        else:
            frame.systematic_llr[lay.pre_positions] = llrs[plan.post_stream_offsets[lay.index - 1]]
        if lay.is_last:
            frame.apriori_llr[lay.post_positions] = LLR_SAT
        frames.append(frame)
    return frames

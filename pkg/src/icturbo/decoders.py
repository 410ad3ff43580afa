"""Inter-block decoding of information-coupled Turbo code chains.

Two schedules are provided. The feed-forward feed-backward (FF-FB)
decoder sweeps the whole chain alternately left-to-right and
right-to-left, exchanging extrinsic messages about every shared segment
until the transport block checks or the sweep budget runs out. The
windowed (WD) decoder slides a two-block window across the chain,
iterating only inside the window, which caps latency and lets blocks be
released on the fly.

Blocks whose CRC has passed are frozen: they are never decoded again,
but their last extrinsic messages keep serving their neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coupling import CbLayout, CodeParameters, build_layouts, reassemble
from .crc import CRC24A, CRC24B, crc24_check
from .turbo import InterleaverSpec, LlrFrame, qpp_interleaver, turbo_decode


@dataclass
class IntraCbResult:
    estimate: np.ndarray
    extrinsic_pre: np.ndarray
    extrinsic_post: np.ndarray
    crc_pass: bool
    iterations: int


def intra_cb_decode(
    frame: LlrFrame,
    layout: CbLayout,
    interleaver: InterleaverSpec,
    i_cb: int,
    pre_apriori: np.ndarray | None = None,
    post_apriori: np.ndarray | None = None,
) -> IntraCbResult:
    """Turbo-decode one block with coupling messages injected.

    pre_apriori / post_apriori replace the frame's a priori entries at
    the shared-segment slots for this call (dummy ends keep their
    saturated priors and accept no message). Decoding stops early on a
    CRC24B hit. The returned extrinsics contain only trellis information,
    so they can be handed to the neighbouring block directly.
    """
    apriori = frame.apriori_llr.copy()
    if pre_apriori is not None:
        if layout.is_first:
            raise ValueError("first block has no incoming shared segment")
        apriori[layout.pre_positions] = pre_apriori
    if post_apriori is not None:
        if layout.is_last:
            raise ValueError("last block has no outgoing shared segment")
        apriori[layout.post_positions] = post_apriori
    work = LlrFrame(
        frame.systematic_llr,
        frame.parity1_llr,
        frame.parity2_llr,
        frame.tail_llr,
        apriori,
    )
    res = turbo_decode(
        work,
        interleaver,
        max_iters=i_cb,
        stop=lambda est: crc24_check(est, CRC24B),
        coupled_positions=(layout.pre_positions, layout.post_positions),
    )
    return IntraCbResult(res.estimate, res.extrinsic_pre, res.extrinsic_post, res.stopped_early, res.iterations)


@dataclass
class DecodeStats:
    """Bookkeeping shared by both schedules.

    decode_invocations counts intra-block decoder calls per block (the
    complexity unit). undecoded_fractions records, per sweep, the
    fraction of blocks still unchecked when the sweep started (empty for
    the windowed schedule). pass_estimates optionally snapshots every
    block estimate after each sweep.
    """

    decode_invocations: np.ndarray
    inter_iterations: int = 0
    undecoded_fractions: list = field(default_factory=list)
    cb_crc_pass: np.ndarray | None = None
    pass_estimates: list = field(default_factory=list)

    @property
    def avg_invocations_per_cb(self) -> float:
        return float(self.decode_invocations.mean())


@dataclass
class ChainDecodeResult:
    success: bool
    tb_estimate: np.ndarray | None
    estimates: list
    stats: DecodeStats
    emitted: list = field(default_factory=list)


class ChainDecoder:
    """Common state for one coupled chain: frames, layouts, interleaver."""

    def __init__(self, frames: list[LlrFrame], params: CodeParameters, i_cb: int):
        if len(frames) != params.n_cb:
            raise ValueError("frame count does not match the parameter set")
        self.frames = frames
        self.params = params
        self.layouts = build_layouts(params)
        self.interleaver = qpp_interleaver(params.block_len)
        self.i_cb = i_cb

    def decode_cb(self, n: int, pre_a, post_a) -> IntraCbResult:
        lay = self.layouts[n]
        return intra_cb_decode(
            self.frames[n],
            lay,
            self.interleaver,
            self.i_cb,
            pre_apriori=None if lay.is_first else pre_a,
            post_apriori=None if lay.is_last else post_a,
        )

    def finish(self, estimates, stats, all_passed: bool) -> ChainDecodeResult:
        if not all_passed:
            return ChainDecodeResult(False, None, estimates, stats)
        tb = reassemble(estimates, self.params)
        ok = crc24_check(tb, CRC24A)
        return ChainDecodeResult(ok, tb, estimates, stats)


def ff_fb_decode(
    frames: list[LlrFrame],
    params: CodeParameters,
    i_cb: int = 8,
    i_tb: int = 20,
    use_stale_messages: bool = False,
    record_passes: bool = False,
) -> ChainDecodeResult:
    """Alternating forward/backward sweeps over the whole chain.

    Even sweeps run first-to-last, odd sweeps last-to-first, always
    skipping frozen blocks. Within a sweep each block consumes the
    freshest available messages from both neighbours (the block behind it
    was usually just decoded); set use_stale_messages to make every block
    read only messages produced before the sweep started. The transport
    block CRC is evaluated once all block CRCs have passed, at which
    point nothing would change anymore and decoding stops either way.
    """
    dec = ChainDecoder(frames, params, i_cb)
    n_cb, d = params.n_cb, params.coupling_len
    fwd_msg = [np.zeros(d) for _ in range(n_cb - 1)]  # about boundary n, flowing right
    bwd_msg = [np.zeros(d) for _ in range(n_cb - 1)]  # about boundary n, flowing left
    decoded = np.zeros(n_cb, dtype=bool)
    estimates = [np.zeros(params.block_len, dtype=np.uint8) for _ in range(n_cb)]
    stats = DecodeStats(np.zeros(n_cb, dtype=np.int64))
    for sweep in range(i_tb):
        stats.undecoded_fractions.append(float(np.mean(~decoded)))
        fwd_read = [m.copy() for m in fwd_msg] if use_stale_messages else fwd_msg
        bwd_read = [m.copy() for m in bwd_msg] if use_stale_messages else bwd_msg
        order = np.flatnonzero(~decoded)
        if sweep % 2 == 1:
            order = order[::-1]
        for n in order:
            res = dec.decode_cb(
                n,
                None if n == 0 else fwd_read[n - 1],
                None if n == n_cb - 1 else bwd_read[n],
            )
            stats.decode_invocations[n] += 1
            estimates[n] = res.estimate
            if n < n_cb - 1:
                fwd_msg[n][:] = res.extrinsic_post
            if n > 0:
                bwd_msg[n - 1][:] = res.extrinsic_pre
            if res.crc_pass:
                decoded[n] = True
        stats.inter_iterations = sweep + 1
        if record_passes:
            stats.pass_estimates.append([e.copy() for e in estimates])
        if decoded.all():
            break
    stats.cb_crc_pass = decoded.copy()
    return dec.finish(estimates, stats, bool(decoded.all()))


def wd_decode(
    frames: list[LlrFrame],
    params: CodeParameters,
    i_cb: int = 8,
    i_wd: int = 6,
) -> ChainDecodeResult:
    """Two-block sliding window with on-the-fly block release.

    Window n works on blocks (n, n+1). Block n is decoded with the
    handover message from the previous window and whatever the look-ahead
    block has reported back; if its CRC still fails and the window budget
    allows, block n+1 is decoded once with block n's fresh outgoing
    message and replies with its own, after which block n retries. On a
    CRC pass the window slides right, carrying block n's outgoing message
    as handover; once the budget is exhausted the whole chain is abandoned
    (blocks beyond the window are never touched). The last block closes
    the chain against its saturated tail dummies, where retrying without
    a neighbour could not change the outcome, so it is decoded once.
    """
    dec = ChainDecoder(frames, params, i_cb)
    n_cb = params.n_cb
    estimates = [np.zeros(params.block_len, dtype=np.uint8) for _ in range(n_cb)]
    stats = DecodeStats(np.zeros(n_cb, dtype=np.int64))
    decoded = np.zeros(n_cb, dtype=bool)
    emitted: list[int] = []
    handover = None
    for n in range(n_cb):
        if n < n_cb - 1:
            feedback = np.zeros(params.coupling_len)
            i_wd_used = 0
            while True:
                res = dec.decode_cb(n, handover, feedback)
                stats.decode_invocations[n] += 1
                i_wd_used += 1
                estimates[n] = res.estimate
                if res.crc_pass or i_wd_used >= i_wd:
                    break
                look = dec.decode_cb(n + 1, res.extrinsic_post, None)
                stats.decode_invocations[n + 1] += 1
                estimates[n + 1] = look.estimate
                feedback = look.extrinsic_pre
            stats.inter_iterations += i_wd_used
        else:
            res = dec.decode_cb(n, handover, None)
            stats.decode_invocations[n] += 1
            stats.inter_iterations += 1
            estimates[n] = res.estimate
        if not res.crc_pass:
            stats.cb_crc_pass = decoded
            return ChainDecodeResult(False, None, estimates, stats, emitted)
        decoded[n] = True
        emitted.append(n)
        handover = res.extrinsic_post
    stats.cb_crc_pass = decoded
    out = dec.finish(estimates, stats, True)
    out.emitted = emitted
    return out


def complexity_report(stats: DecodeStats, params: CodeParameters) -> dict:
    """Average decoder work per block, absolute and normalised.

    The normalisation compares against uncoupled segmentation of the same
    transport block: a coupled chain needs ceil((L+D)/(K-D)) blocks where
    plain segmentation needs ceil(L/K), so the per-block average is scaled
    by that ratio to make schemes with different N comparable.
    """
    l, k, d = params.tb_len, params.block_len, params.coupling_len
    blocks_coupled = -(-(l + d) // (k - d))
    blocks_plain = -(-l // k)
    avg = stats.avg_invocations_per_cb
    return {
        "avg_decodes_per_cb": avg,
        "normalized_complexity": avg * blocks_coupled / blocks_plain,
        "total_decodes": int(stats.decode_invocations.sum()),
        "inter_iterations": stats.inter_iterations,
    }

"""Monte Carlo TBER sweeps for the plain LTE scheme and coupled chains.

One transport block is one independent trial. Every trial draws its
payload, channel noise, and (if used) random repetition pattern from
counter-based streams seeded by (master seed, SNR index, TB index,
role), so a sweep is reproducible bit for bit regardless of how trials
are spread over workers, and runs that share a master seed share their
randomness: the two coupled schedules see the exact same channel
realisation, and the LTE baseline sees the same payload bits and a
prefix-aligned noise stream. Trials run in fixed-size chunks; the stop
rule (enough TB errors, or the TB cap) is evaluated only at chunk
boundaries so that the set of simulated TBs is deterministic too.
"""

from __future__ import annotations

import configparser
import dataclasses
import functools
import io
import json
import math
import multiprocessing
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import AwgnChannel, ChannelConfig
from .coupling import (
    CodeParameters,
    build_transmission_plan,
    route_channel_llrs,
    segment_and_couple,
    select_transmitted_bits,
    solve_code_parameters,
)
from .crc import CRC24A, CRC24B, CRC_LEN, crc24_attach, crc24_check
from .decoders import ff_fb_decode, wd_decode
from .rate_matching import apply_repetition, chase_combine, repetition_profile
from .turbo import VALID_CB_LENGTHS, LlrFrame, qpp_interleaver, turbo_decode, turbo_encode

SCHEMES = ("lte", "ic-fffb", "ic-wd")

# stream roles under one (seed, snr index, tb index) counter
_ROLE_PAYLOAD = 0
_ROLE_NOISE = 1
_ROLE_REPETITION = 2


@dataclass(frozen=True)
class LteParameters:
    """Plain segmentation at matched rate: ceil(L/K) blocks of exactly K.

    Same accounting convention as the coupled parameter set: tb_len is
    the nominal budget L with block CRCs counted as information, so the
    bit string actually segmented is L - 24*n_cb long and zero filler
    pads the last block.
    """

    n_cb: int
    block_len: int
    tb_len: int
    rate: float

    def __post_init__(self):
        if self.block_len not in VALID_CB_LENGTHS:
            raise ValueError(f"K={self.block_len} is not a valid code block length")
        if self.n_cb != -(-self.tb_len // self.block_len):
            raise ValueError("n_cb must be ceil(tb_len / block_len)")
        repetition_profile(self.rate)  # validates the rate range
        if self.payload_len < 1:
            raise ValueError("no room for payload after CRC overhead")

    @property
    def coupling_len(self) -> int:
        return 0

    @property
    def padding(self) -> int:
        return self.n_cb * self.block_len - self.tb_len

    @property
    def payload_len(self) -> int:
        return self.tb_len - CRC_LEN * self.n_cb - CRC_LEN


@dataclass
class SimConfig:
    """Everything one sweep needs; round-trips through an INI file."""

    scheme: str = "ic-fffb"
    tb_len: int | None = None
    rate: float | None = None
    n_cb: int | None = None
    block_len: int | None = None
    coupling_len: int | None = None
    snr_db: tuple[float, ...] = ()
    i_cb: int = 8
    i_tb: int = 20
    i_wd: int = 6
    max_tbs: int = 10_000
    max_tb_errors: int = 50
    chunk_size: int = 50
    seed: int = 0
    repetition_mode: str = "deterministic"
    workers: int = 1
    record_passes: bool = False
    out_dir: str = "results"

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.repetition_mode not in ("deterministic", "random"):
            raise ValueError(f"unknown repetition mode {self.repetition_mode!r}")
        for name in ("i_cb", "i_tb", "i_wd", "max_tbs", "max_tb_errors", "chunk_size", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.record_passes and self.scheme != "ic-fffb":
            raise ValueError("per-pass recording only applies to the ic-fffb scheme")
        self.resolve_parameters()

    def resolve_parameters(self) -> CodeParameters | LteParameters:
        """Turn the code section into a concrete parameter set.

        An explicit (n_cb, block_len, coupling_len) triple wins; without
        one the (tb_len, rate) solver runs. The LTE scheme needs tb_len,
        rate, and block_len (the segmentation K).
        """
        if self.scheme == "lte":
            if self.tb_len is None or self.rate is None or self.block_len is None:
                raise ValueError("lte scheme needs tb_len, rate, and block_len")
            return LteParameters(
                -(-self.tb_len // self.block_len), self.block_len, self.tb_len, self.rate
            )
        triple = (self.n_cb, self.block_len, self.coupling_len)
        if all(v is not None for v in triple):
            n, k, d = triple
            budget = n * k - (n + 1) * d
            tb_len = budget if self.tb_len is None else self.tb_len
            return CodeParameters(n, k, d, tb_len, budget - tb_len)
        if any(v is not None for v in triple):
            raise ValueError("give all of n_cb, block_len, coupling_len or none of them")
        if self.tb_len is None or self.rate is None:
            raise ValueError("need either an explicit (N, K, D) or tb_len plus rate")
        return solve_code_parameters(self.tb_len, self.rate)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["code"] = {"scheme": self.scheme}
        for name in ("tb_len", "rate", "n_cb", "block_len", "coupling_len"):
            value = getattr(self, name)
            if value is not None:
                cp["code"][name] = repr(value)
        cp["decode"] = {"i_cb": str(self.i_cb), "i_tb": str(self.i_tb), "i_wd": str(self.i_wd)}
        cp["channel"] = {"snr_db": ",".join(repr(s) for s in self.snr_db)}
        cp["run"] = {
            "max_tbs": str(self.max_tbs),
            "max_tb_errors": str(self.max_tb_errors),
            "chunk_size": str(self.chunk_size),
            "seed": str(self.seed),
            "repetition_mode": self.repetition_mode,
            "workers": str(self.workers),
            "record_passes": str(self.record_passes).lower(),
        }
        cp["output"] = {"out_dir": self.out_dir}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "SimConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValueError(f"bad config: {exc}") from exc
        kwargs = {}
        code = cp["code"] if cp.has_section("code") else {}
        if "scheme" in code:
            kwargs["scheme"] = code["scheme"].strip()
        for name, cast in (
            ("tb_len", int), ("rate", float),
            ("n_cb", int), ("block_len", int), ("coupling_len", int),
        ):
            if name in code:
                kwargs[name] = cast(code[name])
        if cp.has_option("channel", "snr_db"):
            kwargs["snr_db"] = parse_snr_spec(cp["channel"]["snr_db"])
        for section, name, cast in (
            ("decode", "i_cb", int), ("decode", "i_tb", int), ("decode", "i_wd", int),
            ("run", "max_tbs", int), ("run", "max_tb_errors", int),
            ("run", "chunk_size", int), ("run", "seed", int), ("run", "workers", int),
        ):
            if cp.has_option(section, name):
                kwargs[name] = cast(cp[section][name])
        if cp.has_option("run", "repetition_mode"):
            kwargs["repetition_mode"] = cp["run"]["repetition_mode"].strip()
        if cp.has_option("run", "record_passes"):
            kwargs["record_passes"] = cp["run"].getboolean("record_passes")
        if cp.has_option("output", "out_dir"):
            kwargs["out_dir"] = cp["output"]["out_dir"].strip()
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        return cls.from_ini(Path(path).read_text())


def parse_snr_spec(text: str) -> tuple[float, ...]:
    """Comma list of dB values, or an inclusive a:b:step range."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"snr range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("snr range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError(f"empty snr range {text!r}")
        return tuple(start + i * step for i in range(count))
    return tuple(float(p) for p in text.split(","))


# ---------------------------------------------------------------------------
# per-TB trials

@dataclass(frozen=True)
class _TrialSpec:
    """Plain-value description of one trial, safe to ship to a worker."""

    scheme: str
    n_cb: int
    block_len: int
    coupling_len: int
    tb_len: int
    rate: float
    snr_db: float
    seed: int
    snr_idx: int
    tb_idx: int
    i_cb: int
    i_tb: int
    i_wd: int
    repetition_mode: str
    record_passes: bool


@dataclass
class TrialResult:
    tb_error: bool
    cb_errors: np.ndarray
    invocations: np.ndarray
    undecoded_fractions: list
    pass_errors: np.ndarray | None = None


def _stream(spec: _TrialSpec, role: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([spec.seed, spec.snr_idx, spec.tb_idx, role])
    )


@functools.lru_cache(maxsize=8)
def _ic_context(n_cb, block_len, coupling_len, tb_len):
    budget = n_cb * block_len - (n_cb + 1) * coupling_len
    params = CodeParameters(n_cb, block_len, coupling_len, tb_len, budget - tb_len)
    return params, build_transmission_plan(params), qpp_interleaver(block_len)


@functools.lru_cache(maxsize=8)
def _lte_context(n_cb, block_len, tb_len, rate):
    params = LteParameters(n_cb, block_len, tb_len, rate)
    return params, repetition_profile(rate), qpp_interleaver(block_len)


def _ic_trial(spec: _TrialSpec) -> TrialResult:
    params, plan, interleaver = _ic_context(
        spec.n_cb, spec.block_len, spec.coupling_len, spec.tb_len
    )
    payload = _stream(spec, _ROLE_PAYLOAD).integers(0, 2, size=params.payload_len, dtype=np.uint8)
    tb = crc24_attach(payload, CRC24A)
    tb_padded = np.concatenate([tb, np.zeros(params.padding, dtype=np.uint8)])
    cbs = segment_and_couple(tb_padded, params)
    tx = select_transmitted_bits([turbo_encode(cb, interleaver) for cb in cbs], plan)
    channel = AwgnChannel(ChannelConfig(spec.snr_db), rng=_stream(spec, _ROLE_NOISE))
    frames = route_channel_llrs(channel.demodulate(channel.transmit(tx)), plan)
    if spec.scheme == "ic-fffb":
        res = ff_fb_decode(frames, params, spec.i_cb, spec.i_tb, record_passes=spec.record_passes)
    else:
        res = wd_decode(frames, params, spec.i_cb, spec.i_wd)
    tb_error = not (res.success and np.array_equal(res.tb_estimate, tb))
    cb_errors = np.array(
        [not np.array_equal(res.estimates[n], cbs[n]) for n in range(params.n_cb)]
    )
    pass_errors = None
    if spec.record_passes:
        # freeze the final state into sweeps the early-stopped decoder skipped
        snaps = res.stats.pass_estimates
        pass_errors = np.empty((spec.i_tb, params.n_cb), dtype=bool)
        for s in range(spec.i_tb):
            snap = snaps[min(s, len(snaps) - 1)]
            pass_errors[s] = [
                not np.array_equal(snap[n], cbs[n]) for n in range(params.n_cb)
            ]
    fractions = list(res.stats.undecoded_fractions)
    fractions += [0.0] * (spec.i_tb - len(fractions))
    return TrialResult(
        tb_error, cb_errors, res.stats.decode_invocations.copy(), fractions, pass_errors
    )


def _lte_trial(spec: _TrialSpec) -> TrialResult:
    """Segment, repeat to the target rate, and decode every block once.

    Each block is always decoded (no early chain abort), so the decode
    count per block is exactly one and the complexity unit matches the
    coupled schedules' invocation count.
    """
    params, profile, interleaver = _lte_context(
        spec.n_cb, spec.block_len, spec.tb_len, spec.rate
    )
    k, c = params.block_len, params.n_cb
    payload = _stream(spec, _ROLE_PAYLOAD).integers(0, 2, size=params.payload_len, dtype=np.uint8)
    tb = crc24_attach(payload, CRC24A)
    stream = np.concatenate([tb, np.zeros(params.padding, dtype=np.uint8)])
    cbs = [
        crc24_attach(stream[i * (k - CRC_LEN):(i + 1) * (k - CRC_LEN)], CRC24B)
        for i in range(c)
    ]
    rep_rng = _stream(spec, _ROLE_REPETITION) if spec.repetition_mode == "random" else None
    parts, rep_maps = [], []
    for cb in cbs:
        cw = turbo_encode(cb, interleaver)
        body = np.concatenate([cw.systematic, cw.parity1, cw.parity2])
        tx_body, rep_map = apply_repetition(body, profile, spec.repetition_mode, rep_rng)
        parts.extend([tx_body, cw.tail])
        rep_maps.append(rep_map)
    channel = AwgnChannel(ChannelConfig(spec.snr_db), rng=_stream(spec, _ROLE_NOISE))
    llr = channel.demodulate(channel.transmit(np.concatenate(parts)))
    body_tx = profile.total_transmissions(3 * k)
    estimates = []
    offset = 0
    for rep_map in rep_maps:
        combined = chase_combine(llr[offset:offset + body_tx], rep_map, 3 * k)
        offset += body_tx
        frame = LlrFrame(
            combined[:k], combined[k:2 * k], combined[2 * k:],
            llr[offset:offset + 12], np.zeros(k),
        )
        offset += 12
        res = turbo_decode(frame, interleaver, spec.i_cb, stop=lambda est: crc24_check(est, CRC24B))
        estimates.append(res.estimate)
    cb_errors = np.array([not np.array_equal(estimates[i], cbs[i]) for i in range(c)])
    est_stream = np.concatenate([est[:k - CRC_LEN] for est in estimates])
    tb_est = est_stream[:tb.size]
    crc_ok = all(crc24_check(est, CRC24B) for est in estimates) and crc24_check(tb_est, CRC24A)
    tb_error = not (crc_ok and np.array_equal(tb_est, tb))
    return TrialResult(tb_error, cb_errors, np.ones(c, dtype=np.int64), [])


def run_trial(spec: _TrialSpec) -> TrialResult:
    return _lte_trial(spec) if spec.scheme == "lte" else _ic_trial(spec)


# ---------------------------------------------------------------------------
# sweep driver

@dataclass
class SweepPoint:
    snr_db: float
    tb_count: int
    tb_errors: int
    tber: float
    tber_ci: tuple[float, float]
    cber: np.ndarray
    avg_decodes_per_cb: float
    normalized_complexity: float
    capped: bool
    wall_time_s: float
    undecoded_fractions: list
    pass_cber: np.ndarray | None = None


@dataclass
class SimReport:
    config: SimConfig
    config_text: str
    version: str
    points: list
    wall_time_s: float


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% score interval for a binomial proportion; (0, 1) when empty."""
    if trials == 0:
        return (0.0, 1.0)
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    # at p in {0, 1} one endpoint is exactly the boundary; don't let
    # rounding in center - half leak a few ulps past it
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return (lo, hi)


def _complexity_ratio(params) -> float:
    # work per block relative to uncoupled segmentation of the same TB
    l, k, d = params.tb_len, params.block_len, params.coupling_len
    return -(-(l + d) // (k - d)) / -(-l // k)


def _point_from_trials(params, snr_db: float,
                       results: list, capped: bool, wall: float) -> SweepPoint:
    count = len(results)
    errors = sum(r.tb_error for r in results)
    cber = np.mean([r.cb_errors for r in results], axis=0)
    avg = float(np.mean([r.invocations.mean() for r in results]))
    fractions = [list(r.undecoded_fractions) for r in results if r.undecoded_fractions]
    pass_mats = [r.pass_errors for r in results if r.pass_errors is not None]
    return SweepPoint(
        snr_db=snr_db,
        tb_count=count,
        tb_errors=errors,
        tber=errors / count,
        tber_ci=wilson_interval(errors, count),
        cber=cber,
        avg_decodes_per_cb=avg,
        normalized_complexity=avg * _complexity_ratio(params),
        capped=capped and errors < 20,
        wall_time_s=wall,
        undecoded_fractions=list(np.mean(fractions, axis=0)) if fractions else [],
        pass_cber=np.mean(pass_mats, axis=0) if pass_mats else None,
    )


def _trial_specs(config: SimConfig, params, snr_idx: int, snr_db: float,
                 start: int, count: int) -> list:
    return [
        _TrialSpec(
            config.scheme, params.n_cb, params.block_len, params.coupling_len,
            params.tb_len, config.rate if config.rate is not None else 0.0,
            snr_db, config.seed, snr_idx, start + j,
            config.i_cb, config.i_tb, config.i_wd,
            config.repetition_mode, config.record_passes,
        )
        for j in range(count)
    ]


def run_trials(config: SimConfig, count: int) -> list:
    """Per-TB results for the first SNR point, in TB-index order.

    The building block for paired-seed comparisons: configs sharing a
    seed see the same payloads and channel noise, so scheme orderings
    can be read off trial by trial instead of from rate estimates.
    """
    config.validate()
    if not config.snr_db:
        raise ValueError("config needs at least one SNR point")
    params = config.resolve_parameters()
    specs = _trial_specs(config, params, 0, config.snr_db[0], 0, count)
    if config.workers > 1:
        with multiprocessing.get_context("fork").Pool(config.workers) as pool:
            return pool.map(run_trial, specs)
    return [run_trial(s) for s in specs]


def run_sweep(config: SimConfig) -> SimReport:
    """Simulate every SNR point until max_tb_errors errors or max_tbs TBs."""
    config.validate()
    params = config.resolve_parameters()
    started = time.monotonic()
    points = []
    pool = None
    try:
        if config.workers > 1:
            pool = multiprocessing.get_context("fork").Pool(config.workers)
        for snr_idx, snr_db in enumerate(config.snr_db):
            t0 = time.monotonic()
            results = []
            errors = 0
            while len(results) < config.max_tbs and errors < config.max_tb_errors:
                n = min(config.chunk_size, config.max_tbs - len(results))
                specs = _trial_specs(config, params, snr_idx, snr_db, len(results), n)
                chunk = pool.map(run_trial, specs) if pool else [run_trial(s) for s in specs]
                results.extend(chunk)
                errors = sum(r.tb_error for r in results)
            capped = errors < config.max_tb_errors
            points.append(
                _point_from_trials(params, snr_db, results, capped, time.monotonic() - t0)
            )
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return SimReport(
        config=config,
        config_text=config.to_ini(),
        version=_describe_version(),
        points=points,
        wall_time_s=time.monotonic() - started,
    )


def per_cb_profile(config: SimConfig) -> SimReport:
    """Per-pass, per-block error rates for the forward/backward schedule.

    Convenience wrapper around run_sweep with pass recording switched on;
    each point's pass_cber matrix has one row per inter-block sweep and
    one column per block.
    """
    if config.scheme != "ic-fffb":
        raise ValueError("per-pass profiling only applies to the ic-fffb scheme")
    profiled = dataclasses.replace(config, record_passes=True)
    return run_sweep(profiled)


def _describe_version() -> str:
    try:
        rev = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        ).stdout.strip()
    except OSError:
        rev = ""
    return f"{__version__}+{rev}" if rev else __version__


# ---------------------------------------------------------------------------
# outputs

_CSV_COLUMNS = (
    "snr_db", "tb_count", "tb_errors", "tber", "tber_ci_low", "tber_ci_high",
    "avg_decodes_per_cb", "normalized_complexity", "capped",
)


def _fmt(x) -> str:
    return format(x, ".12g") if isinstance(x, float) else str(x)


def sweep_csv(report: SimReport) -> str:
    """One row per SNR point, byte-identical for identical seeds."""
    lines = [",".join(_CSV_COLUMNS)]
    for p in report.points:
        lines.append(",".join(_fmt(v) for v in (
            p.snr_db, p.tb_count, p.tb_errors, p.tber, p.tber_ci[0], p.tber_ci[1],
            p.avg_decodes_per_cb, p.normalized_complexity, int(p.capped),
        )))
    return "\n".join(lines) + "\n"


def profile_csv(point: SweepPoint) -> str:
    n_cb = point.pass_cber.shape[1]
    lines = ["pass," + ",".join(f"cb_{n}" for n in range(n_cb))]
    for s, row in enumerate(point.pass_cber):
        lines.append(f"{s + 1}," + ",".join(_fmt(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def report_json(report: SimReport) -> str:
    obj = {
        "version": report.version,
        "config": {k: v for k, v in dataclasses.asdict(report.config).items()},
        "config_text": report.config_text,
        "wall_time_s": report.wall_time_s,
        "points": [
            {
                "snr_db": p.snr_db,
                "tb_count": p.tb_count,
                "tb_errors": p.tb_errors,
                "tber": p.tber,
                "tber_ci": list(p.tber_ci),
                "capped": p.capped,
                "cber": [float(v) for v in p.cber],
                "avg_decodes_per_cb": p.avg_decodes_per_cb,
                "normalized_complexity": p.normalized_complexity,
                "undecoded_fractions": [float(v) for v in p.undecoded_fractions],
                "wall_time_s": p.wall_time_s,
            }
            for p in report.points
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def emit_outputs(report: SimReport, out_dir=None) -> dict:
    """Write sweep.csv, report.json, and per-point profile CSVs.

    Returns {kind: path}. I/O errors carry the offending path.
    """
    out = Path(out_dir if out_dir is not None else report.config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        paths["csv"] = out / "sweep.csv"
        paths["csv"].write_text(sweep_csv(report))
        paths["json"] = out / "report.json"
        paths["json"].write_text(report_json(report))
        for p in report.points:
            if p.pass_cber is not None:
                path = out / f"profile_{p.snr_db:g}dB.csv"
                path.write_text(profile_csv(p))
                paths[f"profile_{p.snr_db:g}"] = path
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out}: {exc}") from exc
    return {k: str(v) for k, v in paths.items()}

"""Command line front end: TBER sweeps, parameter solving, EXIT curves,
and decoding thresholds. Every subcommand prints machine-readable output
(CSV or JSON) and exits nonzero on configuration errors."""

from __future__ import annotations

import argparse
import json
import math
import sys

from .channel import snr_db_to_sigma_tilde
from .coupling import solve_code_parameters
from .exit_chart import (
    MotherExitFamily,
    exit_ic,
    exit_rep,
    ic_threshold,
    lte_threshold,
)
from .simulate import SCHEMES, SimConfig, emit_outputs, parse_snr_spec, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icturbo")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo TBER sweep")
    sim.add_argument("--config", help="INI config file; flags below override it")
    sim.add_argument("--scheme", choices=SCHEMES)
    sim.add_argument("--snr", help="dB values a,b,c or inclusive range a:b:step")
    sim.add_argument("--tb-len", type=int)
    sim.add_argument("--rate", type=float)
    sim.add_argument("--n", type=int, help="number of code blocks")
    sim.add_argument("--k", type=int, help="code block length")
    sim.add_argument("--d", type=int, help="coupling length")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--max-tbs", type=int)
    sim.add_argument("--max-tb-errors", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--profile", action="store_true",
                     help="record per-pass CB error rates (ic-fffb only)")

    par = sub.add_parser("params", help="solve (N, K, D) for a TB length and rate")
    par.add_argument("--tb-len", type=int, required=True)
    par.add_argument("--rate", type=float, required=True)
    par.add_argument("--rate-tol", type=float, default=5e-3)

    ext = sub.add_parser("exit", help="emit an EXIT curve as i_a,i_e CSV")
    ext.add_argument("--snr", type=float, required=True, help="channel SNR in dB")
    group = ext.add_mutually_exclusive_group()
    group.add_argument("--rep-rate", type=float, help="repetition-matched rate below 1/3")
    group.add_argument("--coupling-fraction", type=float, help="known-bit fraction 2D/K")
    ext.add_argument("--samples", type=int, default=100_000)
    ext.add_argument("--frame-len", type=int, default=5000)
    ext.add_argument("--seed", type=int, default=0)
    ext.add_argument("--out", help="CSV path (default: stdout)")

    thr = sub.add_parser("threshold", help="bisect the EXIT decoding threshold")
    group = thr.add_mutually_exclusive_group(required=True)
    group.add_argument("--rate", type=float, help="plain scheme at a repetition-matched rate")
    group.add_argument("--coupling-fraction", type=float, help="coupled scheme, fraction 2D/K")
    group.add_argument("--d", type=int, help="coupled scheme via an explicit (K, D)")
    thr.add_argument("--k", type=int, default=6144, help="block length when --d is used")
    thr.add_argument("--lo", type=float, default=-7.0, help="bracket low (tunnel closed), dB")
    thr.add_argument("--hi", type=float, default=-3.0, help="bracket high (tunnel open), dB")
    thr.add_argument("--tol", type=float, default=0.02, help="bisection tolerance, dB")
    thr.add_argument("--samples", type=int, default=100_000)
    thr.add_argument("--frame-len", type=int, default=5000)
    thr.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_simulate(args) -> int:
    config = SimConfig.from_file(args.config) if args.config else SimConfig()
    overrides = {
        "scheme": args.scheme,
        "tb_len": args.tb_len,
        "rate": args.rate,
        "n_cb": args.n,
        "block_len": args.k,
        "coupling_len": args.d,
        "seed": args.seed,
        "max_tbs": args.max_tbs,
        "max_tb_errors": args.max_tb_errors,
        "workers": args.workers,
        "out_dir": args.out,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    if args.snr is not None:
        config.snr_db = parse_snr_spec(args.snr)
    if args.profile:
        config.record_passes = True
    config.validate()
    if not config.snr_db:
        raise ValueError("no SNR points to sweep")
    report = run_sweep(config)
    paths = emit_outputs(report)
    for p in report.points:
        print(
            f"snr {p.snr_db:+.2f} dB  tber {p.tber:.3e} ({p.tb_errors}/{p.tb_count})"
            f"  decodes/cb {p.avg_decodes_per_cb:.2f}" + ("  [capped]" if p.capped else "")
        )
    print("wrote " + " ".join(sorted(paths.values())))
    return 0


def _cmd_params(args) -> int:
    params = solve_code_parameters(args.tb_len, args.rate, rate_tol=args.rate_tol)
    print(json.dumps({
        "n_cb": params.n_cb,
        "block_len": params.block_len,
        "coupling_len": params.coupling_len,
        "tb_len": params.tb_len,
        "padding": params.padding,
        "rate": params.rate,
    }, indent=2))
    return 0


def _cmd_exit(args) -> int:
    family = MotherExitFamily(
        samples_per_point=args.samples, frame_len=args.frame_len, seed=args.seed
    )
    sigma = snr_db_to_sigma_tilde(args.snr)
    if args.rep_rate is not None:
        curve = exit_rep(family, args.rep_rate, sigma)
    elif args.coupling_fraction is not None:
        curve = exit_ic(family, args.coupling_fraction, sigma)
    else:
        curve = family.curve_at(sigma)
    lines = ["i_a,i_e"]
    lines += [f"{ia:.6f},{ie:.6f}" for ia, ie in zip(curve.i_a, curve.i_e)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_threshold(args) -> int:
    family = MotherExitFamily(
        samples_per_point=args.samples, frame_len=args.frame_len, seed=args.seed
    )
    if args.rate is not None:
        result = lte_threshold(family, args.rate, args.lo, args.hi, tol_db=args.tol)
        label = {"scheme": "lte", "rate": args.rate}
    else:
        fraction = args.coupling_fraction
        if fraction is None:
            fraction = 2.0 * args.d / args.k
        result = ic_threshold(family, fraction, args.lo, args.hi, tol_db=args.tol)
        label = {"scheme": "ic", "coupling_fraction": fraction}
    print(json.dumps({
        **label,
        "snr_db": result.snr_db,
        "bracket_lo_db": result.bracket_lo_db,
        "bracket_hi_db": result.bracket_hi_db,
        "tol_db": result.tol_db,
        "evaluations": result.evaluations,
    }, indent=2))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "params": _cmd_params,
        "exit": _cmd_exit,
        "threshold": _cmd_threshold,
    }[args.command]
    try:
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

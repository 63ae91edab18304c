"""Command-line front end.

Subcommands:
  analyze   parameter sweep -> CSV of security metrics
  simulate  Monte Carlo session -> JSON transcript summary
  wigner    phase-space grid dump -> CSV for external plotting

Outputs are reproducible byte-for-byte for identical flags, config file
and seed. Option precedence: command-line flags > --config JSON file >
built-in defaults. The effective configuration is echoed into a header of
every output file.

Exit codes: 0 success (including a protocol abort), 1 usage error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channel import ChannelModel, FiberSpec
from .metrics import METRIC_FIELDS, evaluate_all
from .protocol import (ATTACK_KINDS, AttackModel, SessionConfig, apply_attack,
                       estimate_statistics, run_session)
from .quadrature import IntegrationError
from .states import PascsState, negativity_minimum, wigner_xy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

SWEEP_VARIABLES = ("zeta_c", "alpha", "t_amp", "distance_km")


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvb92",
        description="Analysis and simulation tools for a continuous-variable "
                    "B92 key-distribution protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--alpha", type=float, default=None,
                       help="signal amplitude (default 1.2)")
        p.add_argument("--zeta-c", type=float, default=None,
                       help="post-selection threshold (default 1.0)")
        p.add_argument("--t-amp", type=float, default=None,
                       help="amplitude transmittance of the channel")
        p.add_argument("--distance-km", type=float, default=None,
                       help="fiber length; alternative to --t-amp")
        p.add_argument("--atten-exp", type=float, default=None,
                       help="fiber base-10 attenuation exponent per km "
                            "(default 0.02)")
        p.add_argument("--det-eff", type=float, default=None,
                       help="detector efficiency (default 0.9)")
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default 0)")
        p.add_argument("--jobs", type=int, default=None,
                       help="max concurrent workers (default 1)")
        p.add_argument("--out", type=str, default=None,
                       help="output file (default stdout)")
        p.add_argument("--config", type=str, default=None,
                       help="JSON file of default option values")

    pa = sub.add_parser(
        "analyze",
        help="sweep one parameter and write security metrics as CSV",
        description="CSV columns, in order: the swept variable, then "
                    + ", ".join(METRIC_FIELDS) + ".")
    add_shared(pa)
    pa.add_argument("--sweep", choices=SWEEP_VARIABLES, required=True,
                    help="variable to sweep")
    pa.add_argument("--start", type=float, required=True)
    pa.add_argument("--stop", type=float, required=True)
    pa.add_argument("--points", type=int, required=True)

    ps = sub.add_parser(
        "simulate",
        help="run a Monte Carlo protocol session and write a JSON summary")
    add_shared(ps)
    ps.add_argument("--n-pulses", type=int, default=None,
                    help="number of pulses (default 100000)")
    ps.add_argument("--disclose-fraction", type=float, default=None)
    ps.add_argument("--error-tolerance", type=float, default=None)
    ps.add_argument("--attack", choices=("none",) + ATTACK_KINDS,
                    default=None)
    ps.add_argument("--t-eve", type=float, default=None,
                    help="eavesdropper transmittance for beam_splitter_tap")
    ps.add_argument("--records", action="store_true",
                    help="include full per-pulse records in the JSON output")

    pw = sub.add_parser(
        "wigner",
        help="dump a Wigner-function grid as CSV (columns zr, zi, w)")
    add_shared(pw)
    pw.add_argument("--j", type=int, choices=(0, 1), default=0,
                    help="bit label of the state")
    pw.add_argument("--zr-min", type=float, default=-3.0)
    pw.add_argument("--zr-max", type=float, default=3.0)
    pw.add_argument("--zi-min", type=float, default=-3.0)
    pw.add_argument("--zi-max", type=float, default=3.0)
    pw.add_argument("--points", type=int, default=81,
                    help="grid points per axis")
    return parser


_DEFAULTS = {
    "alpha": 1.2, "zeta_c": 1.0, "t_amp": None, "distance_km": None,
    "atten_exp": 0.02, "det_eff": 0.9, "seed": 0, "jobs": 1, "out": None,
    "n_pulses": 100000, "disclose_fraction": 0.2, "error_tolerance": 0.05,
    "attack": "none", "t_eve": None,
}


def _effective_options(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    from_file = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}")
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(from_file) - set(_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    opts = {}
    for key, default in _DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            opts[key] = flag
        elif key in from_file:
            opts[key] = from_file[key]
        else:
            opts[key] = default
    return opts


def _channel_from_options(opts: dict):
    if opts["t_amp"] is not None and opts["distance_km"] is not None:
        raise UsageError("give either --t-amp or --distance-km, not both")
    if opts["distance_km"] is not None:
        return FiberSpec(opts["distance_km"], opts["atten_exp"],
                         opts["det_eff"])
    t = opts["t_amp"] if opts["t_amp"] is not None else 1.0
    try:
        return ChannelModel(t)
    except ValueError as exc:
        raise UsageError(str(exc))


def _write_output(path: str | None, text: str):
    """Atomic write; a failure never leaves a partial file behind."""
    if path is None:
        sys.stdout.write(text)
        return
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_header(opts: dict, extra: dict) -> str:
    merged = {k: v for k, v in {**opts, **extra}.items() if v is not None}
    body = json.dumps(merged, sort_keys=True)
    return f"# config: {body}\n"


def cmd_analyze(args) -> int:
    opts = _effective_options(args)
    if not args.start < args.stop:
        raise UsageError("--start must be less than --stop")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    values = np.linspace(args.start, args.stop, args.points)

    def point(v: float):
        o = dict(opts)
        o[args.sweep] = float(v)
        if args.sweep == "t_amp":
            o["distance_km"] = None
        elif args.sweep == "distance_km":
            o["t_amp"] = None
        ch = _channel_from_options(o)
        state = PascsState(0, o["alpha"])
        return evaluate_all(state, ch, o["zeta_c"])

    jobs = max(1, int(opts["jobs"]))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(point, values))
    else:
        metrics = [point(v) for v in values]

    lines = [_config_header(opts, {"sweep": args.sweep, "start": args.start,
                                   "stop": args.stop, "points": args.points})]
    lines.append(",".join((args.sweep,) + METRIC_FIELDS) + "\n")
    for v, m in zip(values, metrics):
        row = [_fmt(v)] + [_fmt(getattr(m, f)) for f in METRIC_FIELDS]
        lines.append(",".join(row) + "\n")
    _write_output(opts["out"], "".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    opts = _effective_options(args)
    ch = _channel_from_options(opts)
    attack = None
    if opts["attack"] != "none":
        try:
            attack = AttackModel(opts["attack"], t_eve=opts["t_eve"])
        except ValueError as exc:
            raise UsageError(str(exc))
    elif opts["t_eve"] is not None:
        raise UsageError("--t-eve requires --attack beam_splitter_tap")
    try:
        cfg = SessionConfig(
            n_pulses=opts["n_pulses"], alpha=opts["alpha"],
            zeta_c=opts["zeta_c"], channel=ch,
            disclose_fraction=opts["disclose_fraction"],
            error_tolerance=opts["error_tolerance"], seed=opts["seed"],
            attack=attack)
    except ValueError as exc:
        raise UsageError(str(exc))

    jobs = max(1, int(opts["jobs"]))
    t = apply_attack(cfg, jobs=jobs) if attack else run_session(cfg, jobs=jobs)
    stats = estimate_statistics(t)
    analytic = evaluate_all(PascsState(0, cfg.alpha), ch, cfg.zeta_c)

    summary = {
        "config": {k: v for k, v in opts.items()
                   if v is not None and k != "out"},
        "aborted": t.aborted,
        "n_pulses": t.n_pulses,
        "n_conclusive": stats.n_conclusive,
        "n_disclosed": stats.n_disclosed,
        "key_length": int(t.sifted_alice.size),
        "empirical": {
            "r_acc": stats.r_acc, "r_acc_se": stats.r_acc_se,
            "delta_disclosed": stats.delta_disclosed,
            "delta_disclosed_se": stats.delta_disclosed_se,
            "delta_full": stats.delta_full,
            "delta_full_se": stats.delta_full_se,
        },
        "analytic": analytic.as_dict(),
        "attack_info": t.attack_info,
        "message_log": t.message_log,
    }
    if args.records:
        summary["records"] = [
            {"alice_bit": r.alice_bit, "bob_basis_bit": r.bob_basis_bit,
             "outcome": r.outcome, "conclusive": r.conclusive,
             "disclosed": r.disclosed}
            for r in t.records]
    _write_output(opts["out"], json.dumps(summary, sort_keys=True, indent=1)
                  + "\n")

    def show(name, emp, ana):
        e = "n/a" if emp is None else _fmt(emp)
        print(f"{name:>10}: empirical {e}  analytic {_fmt(ana)}",
              file=sys.stderr)

    show("r_acc", stats.r_acc, analytic.r_acc)
    show("delta", stats.delta_full, analytic.delta)
    if t.aborted:
        print("session aborted: disclosed error rate "
              f"{_fmt(t.empirical_delta)} exceeds tolerance", file=sys.stderr)
    return EXIT_OK


def cmd_wigner(args) -> int:
    opts = _effective_options(args)
    if not (args.zr_min < args.zr_max and args.zi_min < args.zi_max):
        raise UsageError("grid ranges must satisfy min < max")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    state = PascsState(args.j, opts["alpha"])
    zr = np.linspace(args.zr_min, args.zr_max, args.points)
    zi = np.linspace(args.zi_min, args.zi_max, args.points)
    w = wigner_xy(state, zr[:, None], zi[None, :])

    lines = [_config_header(opts, {"j": args.j, "points": args.points})]
    if state.alpha > 0:
        point, value = negativity_minimum(state)
        lines.append(f"# negativity minimum: w={_fmt(value)} at "
                     f"zr={_fmt(point.zr)}, zi={_fmt(point.zi)}\n")
    lines.append("zr,zi,w\n")
    for i, x in enumerate(zr):
        for k, y in enumerate(zi):
            lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(w[i, k])}\n")
    _write_output(opts["out"], "".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handler = {"analyze": cmd_analyze, "simulate": cmd_simulate,
               "wigner": cmd_wigner}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

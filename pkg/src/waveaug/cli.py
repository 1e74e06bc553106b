"""Command line entry point: ``waveaug {run,report,coldstart,selftest}``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from waveaug import harness


def _out_dir(args, spec=None) -> Path:
    if args.out:
        return Path(args.out)
    if spec is not None:
        return harness._output_dir(spec)
    if os.environ.get(harness.OUTPUT_ENV):
        return Path(os.environ[harness.OUTPUT_ENV])
    return Path(args.ledger).resolve().parent


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


def _report(records, out: Path):
    paths = harness.emit_report(harness.aggregate(records), out)
    for p in paths:
        print(p)


def cmd_run(args) -> int:
    spec = harness.parse_config(args.config)
    if args.repeats is not None:
        spec.n_repeats = args.repeats
    out = _out_dir(args, spec)
    records = harness.run_experiment(spec, output_dir=out, log=None if args.quiet else _log)
    _report(records, out)
    return 0


def cmd_coldstart(args) -> int:
    spec = harness.parse_config(args.config)
    if args.repeats is not None:
        spec.n_repeats = args.repeats
    fractions = sorted({float(f) for f in args.fractions.split(",") if f.strip()} | {1.0})
    for f in fractions:
        if not 0 < f <= 1:
            raise ValueError(f"fraction {f} outside (0, 1]")
    out = _out_dir(args, spec)
    records = harness.run_experiment(spec, output_dir=out, fractions=fractions,
                                     log=None if args.quiet else _log)
    _report(records, out)
    return 0


def cmd_report(args) -> int:
    records = harness.read_ledger(args.ledger)
    if not records:
        raise ValueError(f"ledger {args.ledger} has no records")
    _report(records, _out_dir(args))
    return 0


def cmd_selftest(args) -> int:
    from waveaug.selftest import run_all

    return 0 if run_all(print) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="waveaug", description="Wavelet augmentation experiments for DLinear.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every (horizon, method, seed) of a config")
    r.add_argument("config", help="YAML config file or shipped config name")
    r.add_argument("--out", help=f"output directory (default: ${harness.OUTPUT_ENV} or the config's output_dir)")
    r.add_argument("--repeats", type=int, help="override n_repeats")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("coldstart", help="rerun a config on down-sampled training data")
    c.add_argument("config")
    c.add_argument("--fractions", default="0.15,0.3,0.75", help="comma separated; 1.0 is always added")
    c.add_argument("--out")
    c.add_argument("--repeats", type=int)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_coldstart)

    rep = sub.add_parser("report", help="aggregate a ledger into report files")
    rep.add_argument("ledger")
    rep.add_argument("--format", default="csv", choices=["csv"])
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)

    s = sub.add_parser("selftest", help="run the built-in invariant checks")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"waveaug: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

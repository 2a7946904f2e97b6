"""Command-line entry point: ``lcris run|sweep|thermal``."""

from __future__ import annotations

import argparse
import logging
import sys

from lcris.config import parse_config
from lcris.errors import LcrisError
from lcris.experiment import SWEEP_PARAMS, run_experiment, run_sweep, summarize, write_thermal_csv
from lcris.schemes import Scheme

log = logging.getLogger("lcris")


def _schemes(text):
    if text is None:
        return None
    try:
        return [Scheme.parse(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _values(text):
    out = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if "x" in item:                        # 8x8 style RIS sizes
            a, _, b = item.partition("x")
            out.append(float(int(a) * int(b)))
        else:
            out.append(float(item))
    if not out:
        raise argparse.ArgumentTypeError("empty value list")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcris", description="LC-RIS max-min SINR experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="key = value config file")
        sp.add_argument("--out", required=True, help="output CSV path")

    def runner(sp):
        sp.add_argument("--trials", type=int, help="override the number of trials")
        sp.add_argument("--seed", type=int, help="override the base seed")
        sp.add_argument("--schemes", type=_schemes, help="comma-separated subset, e.g. Proposed,WithoutRis")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        sp.add_argument("--full-scale", action="store_true",
                        help="allow large M*N scenarios such as the 64 x 1600 reference setup")

    r = sub.add_parser("run", help="Monte Carlo run of the selected schemes")
    common(r)
    runner(r)

    s = sub.add_parser("sweep", help="run the schemes over a list of parameter values")
    common(s)
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", required=True, type=_values, help="comma-separated values")
    runner(s)

    t = sub.add_parser("thermal", help="phase ceiling versus temperature")
    common(t)
    return p


def _apply_overrides(cfg, args):
    changes = {}
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(parse_config(args.config), args)
        if args.command == "thermal":
            write_thermal_csv(cfg, args.out)
            return 0
        if args.command == "run":
            rows = run_experiment(cfg, args.schemes, args.out, args.workers, args.full_scale)
        else:
            rows = run_sweep(cfg, args.param, args.values, args.schemes, args.out,
                             args.workers, args.full_scale)
    except (LcrisError, ValueError) as exc:
        print(f"lcris: error: {exc}", file=sys.stderr)
        return 2
    for scheme, param, pv, n, mean, std in summarize(rows):
        label = f"{param}={pv:g} " if param else ""
        print(f"{label}{scheme:15s} n={n:3d}  mean {mean:8.3f} dB  std {std:6.3f} dB")
    failed = sum(r.status != "ok" for r in rows)
    if failed:
        print(f"lcris: {failed} scheme runs failed; see the status column", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

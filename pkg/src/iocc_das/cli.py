"""Command line entry point: ``iocc-das {example1,example2,example3,run,spec}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import SweepError, make_example1, make_example2, make_example3, run_sweep
from .specfile import SpecError, dump_spec, load_spec, with_overrides

EXIT_OK, EXIT_SPEC, EXIT_RUNTIME = 0, 2, 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-sweep", help='RAU counts, "a..b" or "k1,k2,..."')
    p.add_argument("--criterion", help="SDC, IOCC or both (comma list allowed)")
    p.add_argument("--seeds", help='seed count n (seeds 0..n-1), "a..b" or a comma list')
    p.add_argument("--mc-draws", type=int, help="Monte Carlo draws per location")
    p.add_argument("--eval-locations", type=int,
                   help="evaluate a fixed random subset of this many samples (0 = all)")
    p.add_argument("--out", help="output directory (default out/<name>)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes over seeds")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iocc-das",
                                     description="RAU placement sweeps for distributed antenna systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("example1", "1-D linear cell, optimized power"),
                        ("example2", "2-D square, PPP users, optimized power"),
                        ("example3", "2-D square, radial demand, equal power")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--alpha", type=float, help="path-loss exponent")
        _add_common(p)
    p = sub.add_parser("run", help="run an experiment file")
    p.add_argument("spec_file")
    _add_common(p)
    p = sub.add_parser("spec", help="print an example's experiment file")
    p.add_argument("example", choices=["example1", "example2", "example3"])
    p.add_argument("--alpha", type=float)
    return parser


def _example(name, alpha):
    makers = {"example1": make_example1, "example2": make_example2, "example3": make_example3}
    return makers[name]() if alpha is None else makers[name](alpha)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "spec":
            sys.stdout.write(dump_spec(_example(args.example, args.alpha)))
            return EXIT_OK
        if args.command == "run":
            spec = load_spec(args.spec_file)
        else:
            spec = _example(args.command, args.alpha)
        spec = with_overrides(spec, k_sweep=args.k_sweep, criteria=args.criterion,
                              seeds=args.seeds, mc_draws=args.mc_draws, out=args.out,
                              eval_locations=args.eval_locations)
        if args.jobs < 1:
            raise SpecError("--jobs must be >= 1")
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC

    out = Path(spec.out) if spec.out else Path("out") / spec.name
    try:
        out.mkdir(parents=True, exist_ok=True)
        # resolved file: rerunning it reproduces this sweep (wherever it is written)
        (out / "experiment.toml").write_text(dump_spec(replace(spec, out=None)))
        run_sweep(spec, out_dir=out, jobs=args.jobs)
    except SweepError as exc:
        print(f"error: {exc}; partial outputs in {out}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

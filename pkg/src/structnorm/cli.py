"""Command-line entry point: ``structnorm --model FILE --cmd NAME``."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .report import COMMANDS, EXIT_PARSE, RunOptions, run_from_file


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="structnorm",
        description="Bound expressions, Monte Carlo norms and exact trace moments "
                    "for structured random matrices.")
    ap.add_argument("--model", required=True, help="model JSON file")
    ap.add_argument("--cmd", required=True, choices=COMMANDS, help="what to run")
    ap.add_argument("--samples", type=int, default=None,
                    help="Monte Carlo samples (default: 200 for n <= 512, else 50; "
                         "covariance: 100 repetitions)")
    ap.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--p", type=int, default=None,
                    help="moment order: trace moment Tr X^{2p} for 'moments' (default 2), "
                         "E||X||^p for 'mc' (default ceil(log n))")
    ap.add_argument("--bins", type=int, default=60, help="ESD histogram bins (default: 60)")
    ap.add_argument("--k-values", type=_int_list, default=None,
                    help="block sizes for 'sweep', comma-separated (default: powers of 4 dividing n, and n)")
    ap.add_argument("--n-values", type=_int_list, default=None,
                    help="sample sizes for 'covariance', comma-separated (default: the file's samples)")
    ap.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo (default: 1)")
    ap.add_argument("--dump-shapes", action="store_true",
                    help="also write shapes.csv for non-graph models in 'moments'")
    ap.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else 0
    opts = RunOptions(samples=args.samples, seed=args.seed, out=args.out, p=args.p,
                      bins=args.bins, k_values=args.k_values, n_values=args.n_values,
                      workers=args.workers, plots=not args.no_plots,
                      dump_shapes=args.dump_shapes)
    code, msg = run_from_file(args.model, args.cmd, opts)
    print(msg, file=sys.stderr if code else sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())

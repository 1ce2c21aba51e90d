"""Command-line entry point.

Usage::

    kreinapprox run problem.json
    kreinapprox ilsq problem.json          # override the problem type
    kreinapprox run --batch DIR            # every *.json in DIR

The result document goes to stdout (or ``--json-out``), diagnostics to
stderr. Exit codes: 0 solved, 2 no_solution, 3 invalid_input, 4 a solved
result whose oracle margins failed under ``--strict``.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .fileio import PROBLEM_TYPES, dumps, process


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kreinapprox",
        description="Solve and certify indefinite least squares, spline and smoothing problems.",
    )
    parser.add_argument("command", choices=("run",) + PROBLEM_TYPES,
                        help="'run' uses the type in the file; a type name overrides it")
    parser.add_argument("file", nargs="?", help="problem file (JSON)")
    parser.add_argument("--batch", metavar="DIR", help="process every *.json file in DIR")
    parser.add_argument("--tol", type=float, help="relative residual tolerance")
    parser.add_argument("--psd-tol", type=float, help="relative eigenvalue slack for positivity")
    parser.add_argument("--rank-tol", type=float, help="relative singular value cutoff")
    parser.add_argument("--seed", type=int, help="seed for the certification samples")
    parser.add_argument("--samples", type=int, help="number of certification samples")
    parser.add_argument("--strict", action="store_true",
                        help="exit 4 when a solved result fails an oracle margin")
    parser.add_argument("--json-out", metavar="PATH", help="write the result here instead of stdout")
    parser.add_argument("--workers", type=int, default=None, help="batch worker processes")
    return parser


def _tolerances(args):
    tol = {}
    if args.tol is not None:
        tol["residual_tol"] = args.tol
    if args.psd_tol is not None:
        tol["psd_tol"] = args.psd_tol
    if args.rank_tol is not None:
        tol["rank_tol"] = args.rank_tol
    return tol


def _one(job):
    path, override, tol, seed, samples, strict = job
    res, code = process(path, override, tol, seed, samples, strict)
    return str(path), res, code


def main(argv=None):
    args = build_parser().parse_args(argv)
    override = None if args.command == "run" else args.command
    if (args.file is None) == (args.batch is None):
        print("error: give exactly one of FILE or --batch DIR", file=sys.stderr)
        return 3
    common = (override, _tolerances(args), args.seed, args.samples, args.strict)
    if args.batch:
        files = sorted(Path(args.batch).glob("*.json"))
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(_one, [(f,) + common for f in files]))
        doc = {Path(p).name: res for p, res, _ in outcomes}
        code = max((c for _, _, c in outcomes), default=0)
        for p, res, c in outcomes:
            print(f"{Path(p).name}: {res['status']} (exit {c})", file=sys.stderr)
    else:
        _, doc, code = _one((args.file,) + common)
        msg = doc["status"] + (f": {doc['reason']}" if doc.get("reason") else "")
        if "error" in doc:
            msg += f" [{doc['error']['path']}] {doc['error']['message']}"
        print(msg, file=sys.stderr)
    text = dumps(doc)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

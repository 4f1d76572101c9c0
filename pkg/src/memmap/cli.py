"""Command-line interface: ``memmap train | predict | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
``MEMMAP_LOG`` (error, info, debug) sets log verbosity.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import oracles, store
from .errors import MemmapError
from .learner import HyperParams, fit
from .model import Dataset
from .predictor import predict_batch

log = logging.getLogger("memmap")


class UsageError(Exception):
    """Reported with exit status 2."""


def _setup_logging():
    level = os.environ.get("MEMMAP_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def read_csv(path, header: bool = False, expect_cols: int | None = None):
    """Parse a numeric CSV file into an (R, C) array.

    Returns ``(array, header_names)``. Blank lines are skipped; any other
    malformed row raises :class:`UsageError` naming its 1-based line number.
    """
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    rows, names, width = [], [], expect_cols
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                names = [c.strip() for c in row]
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise UsageError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise UsageError(f"{path}:{lineno}: non-numeric value in row {row!r}") from None
            if not all(np.isfinite(vals)):
                raise UsageError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    return arr, names


def _nu(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid nu {text!r}") from None
    if not (np.isfinite(v) and v > 2):
        raise argparse.ArgumentTypeError("nu must exceed 2")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def cmd_train(args) -> int:
    table, names = read_csv(args.data, header=args.header)
    n = args.n_features
    if table.shape[0] == 0:
        raise UsageError(f"{args.data}: no data rows")
    if n >= table.shape[1]:
        raise UsageError(f"--n-features {n} leaves no target columns ({table.shape[1]} columns)")
    data = Dataset(table[:, :n], table[:, n:], tuple(names[:n]), tuple(names[n:]))
    aux = None
    if args.aux:
        aux, _ = read_csv(args.aux, header=args.header, expect_cols=n)
    hp = HyperParams(M=args.m, nu=args.nu, seed=args.seed, sigma_x2=args.sigma_x2,
                     beta_rel_tol=args.beta_tol, max_outer_iters=args.max_iters)
    model, report = fit(data, hp, aux_override=aux)
    store.save(model, args.out, store_b=args.store_b)
    report_path = f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s (%d iterations, converged=%s)", args.out, report.iterations, report.converged)
    if not report.converged:
        print(f"warning: beta did not converge in {report.iterations} iterations", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    if not os.path.isfile(args.model):
        raise UsageError(f"no such file: {args.model}")
    model = store.load(args.model)
    X, _ = read_csv(args.data, header=args.header)
    if X.shape[0] == 0:
        X = X.reshape(0, model.n)
    if X.shape[1] != model.n:
        raise UsageError(f"{args.data}: {X.shape[1]} feature columns, model expects {model.n}")
    Y = predict_batch(X, model)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"y_hat_{j + 1}" for j in range(model.p)])
        for row in Y:
            writer.writerow(["%.17g" % v for v in row])
    return 0


def cmd_verify(args) -> int:
    reports = oracles.run_suite(args.suite, seed=args.seed, trials=args.trials)
    for r in reports:
        print(r.line())
    payload = {"suite": args.suite, "seed": args.seed, "passed": all(r.passed for r in reports),
               "reports": [r.to_dict() for r in reports]}
    if args.json:
        text = json.dumps(payload, indent=2, sort_keys=True)
        if args.json == "-":
            print(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"verification failed: {r.check} max_rel_err={r.max_rel_err:.3e} "
              f"exceeds {r.tolerance:.0e}", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memmap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a model to a CSV dataset")
    t.add_argument("--data", required=True, help="CSV: n feature columns then p target columns")
    t.add_argument("--n-features", required=True, type=_positive_int)
    t.add_argument("--out", required=True, help="model path (.mmj)")
    t.add_argument("--m", type=_positive_int, default=None, help="inducing points (default min(N, 50))")
    t.add_argument("--nu", type=_nu, default=5.0)
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--aux", help="CSV of inducing points, overrides k-means")
    t.add_argument("--sigma-x2", type=float, default=0.01)
    t.add_argument("--beta-tol", type=_positive_float, default=1e-6)
    t.add_argument("--max-iters", type=_positive_int, default=1000)
    t.add_argument("--store-b", action="store_true", help="include matrix B in the model file")
    t.add_argument("--header", action="store_true", help="skip the first CSV row")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict targets for CSV inputs")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_predict)

    v = sub.add_parser("verify", help="run the numerical oracle suites")
    v.add_argument("--suite", choices=oracles.SUITES + ("all",), default="all")
    v.add_argument("--seed", type=_seed, default=0)
    v.add_argument("--trials", type=_positive_int, default=100)
    v.add_argument("--json", help="write the JSON report here ('-' for stdout)")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"memmap {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (MemmapError, OSError) as exc:
        print(f"memmap {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

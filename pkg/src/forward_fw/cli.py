"""``forward-fw`` command line: run, validate, lmo-check, estimator-stats.

Exit codes: 0 success, 1 config error, 2 numeric failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .algorithms import ConfigError
from .core import DIRECTIONS, NonFiniteStateError, RandomSource
from .estimators import forward_gradient_stats
from .harness import load_spec, run_experiment
from .lmo import check_oracles
from .problems import IdxFormatError, Quadratic

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _load(path):
    try:
        return load_spec(path)
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc.strerror or exc}") from None


class _IOFailure(Exception):
    pass


def cmd_run(args) -> int:
    spec = _load(args.config)
    if args.instrumented:
        spec = dataclasses.replace(spec, instrumented=True)
    if args.timing:
        spec = dataclasses.replace(spec, timing=True)
    if args.out and args.out != "-":
        try:
            # fail on an unwritable path before spending time on the runs
            open(args.out, "a", encoding="utf-8").close()
        except OSError as exc:
            raise _IOFailure(f"cannot write {args.out}: {exc.strerror or exc}") from None
    out = sys.stdout if not args.out or args.out == "-" else args.out
    try:
        result = run_experiment(spec, out=out, jobs=args.jobs)
    except (OSError, IdxFormatError) as exc:
        raise _IOFailure(str(exc)) from None
    print(result.summary(), file=sys.stderr if out is sys.stdout else sys.stdout)
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = _load(args.config)
    print(spec.describe())
    return EXIT_OK


def cmd_lmo_check(args) -> int:
    report = check_oracles(trials=args.trials, max_dim=args.max_dim, seed=args.seed)
    for r in report:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.set_type:<8} trials={r.trials} failures={r.failures} "
              f"max_abs_error={r.max_error:.3e}")
    return EXIT_OK if all(r.passed for r in report) else EXIT_NUMERIC


def cmd_estimator_stats(args) -> int:
    if args.n < 1 or args.N < 2:
        raise ConfigError("need n >= 1 and N >= 2")
    # f(x) = 1/2 ||x||^2 - c'x at x = 0 has gradient -c with ||c|| = 1
    rng = np.random.default_rng(args.seed)
    c = rng.standard_normal(args.n)
    c /= np.linalg.norm(c)
    obj = Quadratic(np.eye(args.n), c)
    stats = forward_gradient_stats(obj, np.zeros(args.n), RandomSource(args.seed, args.distribution), args.N)
    z = np.abs(stats.mean - stats.gradient) / stats.standard_error
    expected = args.n + 2 if args.distribution == "gaussian" else args.n
    print(f"n={args.n} N={args.N} distribution={args.distribution}")
    print(f"max |mean(phi) - grad| / stderr = {z.max():.3f}")
    print(f"E||phi||^2 / ||grad||^2 = {stats.second_moment_ratio:.4f} "
          f"(population {expected}, bound n+4 = {args.n + 4})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forward-fw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte Carlo experiment and write CSV")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--instrumented", action="store_true",
                   help="record FW gap and estimator error (uses exact gradients)")
    p.add_argument("--timing", action="store_true",
                   help="fill mean_wall_time_us (output is then not byte-reproducible)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config and print it with defaults applied")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lmo-check", help="compare every oracle with brute-force enumeration")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lmo_check)

    p = sub.add_parser("estimator-stats", help="Monte Carlo moments of the forward gradient")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--N", type=int, default=100_000)
    p.add_argument("--distribution", choices=DIRECTIONS, default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_estimator_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteStateError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

    sosdim test INPUT... --d 2 [--method sobi --lags 1..12 --strategy np3 --R 200]
    sosdim estimate INPUT... [--estimator forward|backward|bisect]
    sosdim separate INPUT... --out sources.csv [--report solution.json]
    sosdim simulate [--config study.ini] [--full-scale] --out table.tsv

Every option can also be set through an environment variable
``SOSDIM_<OPTION>`` (e.g. ``SOSDIM_SEED=7``); command line flags win.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .bootstrap import BootstrapStrategy, test_dimension
from .bss import BssMethod
from .dataio import format_report, read_series, write_csv, write_report
from .errors import InvalidInputError, NumericalError, ReportIOError
from .estimation import estimate_dimension, parse_estimator
from .study import StudyConfig, parse_int_list, run_rejection_study, with_overrides

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

ENV_PREFIX = "SOSDIM_"

log = logging.getLogger("sosdim")


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _lags(text):
    try:
        lags = parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lag list {text!r}") from exc
    if not lags:
        raise argparse.ArgumentTypeError("empty lag list")
    return lags


def _strategy(text):
    try:
        return BootstrapStrategy.parse(text)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_common(p, estimator=False):
    p.add_argument("inputs", nargs="+", help="one CSV file or one or more WAV files")
    p.add_argument("--method", choices=("amuse", "sobi"), default=_env("method", "sobi"))
    p.add_argument("--lags", type=_lags, default=_env("lags"),
                   help="lag list, e.g. 1..12 or 1,2,5 (default: 1 for AMUSE, 1..12 for SOBI)")
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--format", choices=("tsv", "json"), default=_env("format", "json"))
    p.add_argument("--out", default=_env("out"), help="report file (default: stdout)")
    p.add_argument("--threads", type=int, default=_env("threads"),
                   help="worker threads (default: all CPUs); output does not depend on it")


def _add_bootstrap(p):
    p.add_argument("--strategy", type=_strategy, default=_env("strategy", "np3"),
                   help="parametric, np1, np2 or np3")
    p.add_argument("--R", type=int, default=int(_env("r", 200)), help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=float(_env("alpha", 0.05)))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sosdim",
        description="Second-order blind source separation and bootstrap tests "
                    "for the white-noise subspace dimension.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="bootstrap test of H0,d")
    _add_common(p)
    _add_bootstrap(p)
    p.add_argument("--d", type=int, default=_env("d"), required=_env("d") is None)

    p = sub.add_parser("estimate", help="sequential estimate of the signal dimension")
    _add_common(p)
    _add_bootstrap(p)
    p.add_argument("--estimator", default=_env("estimator", "forward"),
                   help="forward, backward or bisect")

    p = sub.add_parser("separate", help="AMUSE/SOBI separation, sources written as CSV")
    _add_common(p)
    p.add_argument("--report", default=_env("report"),
                   help="also write the solution (diagnostics, unmixing) here")

    p = sub.add_parser("simulate", help="Monte-Carlo rejection-rate study")
    p.add_argument("--config", default=_env("config"), help="INI ([study] section) or JSON file")
    p.add_argument("--full-scale", action="store_true",
                   help="2000 repetitions, T in 200,500,2000,5000, settings 1-3")
    p.add_argument("--R", type=int, default=_env("r"))
    p.add_argument("--repetitions", type=int, default=_env("repetitions"))
    p.add_argument("--seed", type=int, default=_env("seed"))
    p.add_argument("--alpha", type=float, default=_env("alpha"))
    p.add_argument("--format", choices=("tsv", "json"), default=_env("format", "tsv"))
    p.add_argument("--out", default=_env("out"))
    p.add_argument("--threads", type=int, default=_env("threads"))
    return parser


def _method(args):
    lags = args.lags
    if isinstance(lags, str):
        lags = _lags(lags)
    if args.method == "amuse":
        if lags is not None and len(lags) != 1:
            raise InvalidInputError("AMUSE takes exactly one lag")
        return BssMethod.amuse(lags[0] if lags else 1)
    return BssMethod.sobi(lags) if lags else BssMethod.sobi()


def _threads(args):
    return None if args.threads is None else int(args.threads)


def _emit(result, args):
    if args.out:
        write_report(result, args.out, args.format)
    else:
        sys.stdout.write(format_report(result, args.format))


def cmd_test(args):
    x = read_series(args.inputs)
    result = test_dimension(x, int(args.d), BootstrapStrategy.parse(args.strategy), args.R,
                            _method(args), seed=args.seed, threads=_threads(args))
    _emit(result, args)
    if args.out:
        print(f"H0,{result.d}: p-value {result.p_value:.6g} "
              f"({'reject' if result.p_value <= args.alpha else 'accept'} at {args.alpha})")


def cmd_estimate(args):
    x = read_series(args.inputs)
    result = estimate_dimension(x, parse_estimator(args.estimator),
                                BootstrapStrategy.parse(args.strategy), args.R, args.alpha,
                                _method(args), seed=args.seed, threads=_threads(args))
    if args.out:
        write_report(result, args.out, args.format)
    print(result.d_hat)


def cmd_separate(args):
    x = read_series(args.inputs)
    solution = _method(args).fit(x)
    header = [f"s{i}" for i in range(1, solution.p + 1)]
    if args.out:
        write_csv(args.out, solution.sources, header)
    else:
        sys.stdout.write(",".join(header) + "\n")
        for row in solution.sources:
            sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
    if args.report:
        write_report(solution, args.report, args.format)


def cmd_simulate(args):
    config = StudyConfig.from_file(args.config) if args.config else StudyConfig()
    if args.full_scale:
        config = StudyConfig.full_scale(
            methods=config.methods, strategies=config.strategies, R=config.R,
            alpha=config.alpha, hypotheses=config.hypotheses, seed=config.seed,
        )
    config = with_overrides(config, R=args.R, repetitions=args.repetitions, seed=args.seed,
                            alpha=args.alpha)
    StudyConfig.__post_init__(config)

    def progress(done, total):
        if done % 50 == 0 or done == total:
            log.info("%d/%d repetitions", done, total)

    result = run_rejection_study(config, threads=_threads(args), progress=progress)
    _emit(result, args)


COMMANDS = {"test": cmd_test, "estimate": cmd_estimate, "separate": cmd_separate,
            "simulate": cmd_simulate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"sosdim: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"sosdim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ReportIOError, OSError) as exc:
        print(f"sosdim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

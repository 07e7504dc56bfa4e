"""Command-line surface: figure-data regeneration, bound-validity sweeps,
the adjusted-ratio limit check, and the factor-gap scan.

Exit codes: 0 ok, 1 validation or property failure, 2 configuration error,
3 accuracy error (a tail could not be certified to the demanded truncation).
All CSV output is byte-deterministic for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .distributions import AccuracyError
from .experiments import (
    EXAMPLE2_N_GRID,
    RECORDS_N_GRID,
    VALIDATE_APPS,
    conjecture_rows,
    example2_rows,
    figure5_rows,
    records_figure_rows,
    stein_factor_rows,
    validation_rows,
)
from .reports import write_csv
from .stein import verify_solution_properties
from . import figures


class ConfigError(Exception):
    """Bad run configuration (caller error, exit code 2)."""


RECORDS_COLUMNS = [
    ("n", "count"),
    ("lambda_n", "mean"),
    ("sigma2_n", "variance"),
    ("v_n", "real threshold"),
    ("k", "integer threshold"),
    ("exact_lo", "probability"),
    ("exact_hi", "probability"),
    ("ratio_pn_lambda", "ratio"),
    ("ratio_normal", "ratio"),
    ("ratio_normal_corrected", "ratio"),
    ("ratio_pn_sigma2", "ratio"),
    ("flag", "status"),
]

FIGURE5_COLUMNS = [
    ("k", "integer threshold"),
    ("c1", "factor"),
    ("c2", "factor"),
    ("naive", "factor"),
    ("ratio1", "ratio"),
    ("ratio2", "ratio"),
]

EXAMPLE2_COLUMNS = [
    ("n", "count"),
    ("k", "integer threshold"),
    ("k_adjusted", "integer threshold"),
    ("k_variance", "integer threshold"),
    ("exact_lo", "probability"),
    ("exact_hi", "probability"),
    ("limit_ratio_pn_mean", "ratio"),
    ("ratio_pn_mean", "ratio"),
    ("ratio_pn_mean_adjusted", "ratio"),
    ("ratio_pn_variance", "ratio"),
    ("flag", "status"),
]

CONJECTURE_COLUMNS = [
    ("lambda", "mean"),
    ("k", "integer threshold"),
    ("gap", "factor difference"),
    ("log_gap", "natural log"),
    ("gap_positive", "boolean"),
]

STEIN_COLUMNS = [
    ("lambda", "mean"),
    ("k", "integer threshold"),
    ("c0", "factor"),
    ("c1_minus", "factor"),
    ("c1_plus", "factor"),
    ("c1", "factor"),
    ("c2", "factor"),
    ("naive", "factor"),
]

VALIDATE_COLUMNS = [
    ("case", "parameters"),
    ("kind", "bound variant"),
    ("method", "exact|mc"),
    ("a", "shift"),
    ("k", "integer threshold"),
    ("lambda", "mean"),
    ("exact_lo", "probability"),
    ("exact_hi", "probability"),
    ("mc_stderr", "probability"),
    ("pn_tail", "probability"),
    ("ratio", "ratio"),
    ("abs_ratio_minus_1", "deviation"),
    ("bound_total", "bound"),
    ("term_main_c2", "bound term"),
    ("term_c1_lambda_sigma", "bound term"),
    ("term_c1_mu", "bound term"),
    ("term_left_tail", "bound term"),
    ("status", "pass|fail"),
]

VERIFY_COLUMNS = [
    ("lambda", "mean"),
    ("k", "integer threshold"),
    ("i_max", "truncation index"),
    ("check", "property name"),
    ("passed", "boolean"),
    ("detail", "text"),
]


def _parse_grid(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        values = [int(float(part)) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid spec {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"grid spec {text!r} is empty")
    return values


def _parse_lambdas(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse lambda list {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"lambda list {text!r} is empty")
    return values


def _emit(args, columns, rows, config, plotter) -> None:
    write_csv(args.out, columns, rows, config)
    if args.out is not None and plotter is not None and not args.no_plot:
        plotter(rows, str(Path(args.out).with_suffix(".png")))


def _cmd_records_figures(args) -> int:
    grid = _parse_grid(args.grid) or list(RECORDS_N_GRID)
    rows = records_figure_rows(grid, x=args.x)
    config = {"command": "records-figures", "grid": ",".join(map(str, grid)), "x": args.x}
    _emit(args, RECORDS_COLUMNS, rows, config, figures.plot_records_figures)
    return 0


def _cmd_figure5(args) -> int:
    rows, all_below_one = figure5_rows(args.lam, args.k_min, args.k_max)
    config = {
        "command": "figure5",
        "lambda": args.lam,
        "k_min": args.k_min,
        "k_max": args.k_max,
    }
    _emit(args, FIGURE5_COLUMNS, rows, config, figures.plot_figure5)
    if not all_below_one:
        print(
            "property failure: a factor ratio reached 1 on the scanned range",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_example2(args) -> int:
    grid = _parse_grid(args.grid) or list(EXAMPLE2_N_GRID)
    rows = example2_rows(grid, p=args.p, x=args.x)
    config = {
        "command": "example2",
        "grid": ",".join(map(str, grid)),
        "p": args.p,
        "x": args.x,
    }
    _emit(args, EXAMPLE2_COLUMNS, rows, config, figures.plot_example2)
    return 0


def _cmd_validate(args) -> int:
    grid = _parse_grid(args.grid)
    rows, failures = validation_rows(
        args.app, seed=args.seed, samples=args.samples, n_values=grid
    )
    config = {
        "command": "validate",
        "app": args.app,
        "grid": ",".join(map(str, grid)) if grid else "default",
        "seed": args.seed,
        "samples": args.samples,
    }
    _emit(args, VALIDATE_COLUMNS, rows, config, figures.plot_validation)
    if failures:
        print(f"validation failure: {failures} case(s) exceeded their bound", file=sys.stderr)
        return 1
    return 0


def _cmd_conjecture(args) -> int:
    lambdas = _parse_lambdas(args.lambdas)
    rows = conjecture_rows(lambdas, args.k_max_offset)
    config = {
        "command": "conjecture",
        "lambdas": ",".join(f"{v:g}" for v in lambdas),
        "k_max_offset": args.k_max_offset,
    }
    _emit(args, CONJECTURE_COLUMNS, rows, config, figures.plot_conjecture)
    return 0


def _cmd_stein_factors(args) -> int:
    if args.verify:
        report = verify_solution_properties(args.lam, args.k, args.i_max)
        rows = [
            {
                "lambda": report.lam,
                "k": report.k,
                "i_max": report.i_max,
                "check": c.name,
                "passed": c.passed,
                "detail": c.detail.replace(",", ";"),
            }
            for c in report.checks
        ]
        config = {
            "command": "stein-factors",
            "lambda": args.lam,
            "k": args.k,
            "verify": True,
            "i_max": report.i_max,
        }
        _emit(args, VERIFY_COLUMNS, rows, config, None)
        if not report.passed:
            print(
                f"property failure: {[c.name for c in report.failures()]}", file=sys.stderr
            )
            return 1
        return 0
    rows = stein_factor_rows(args.lam, args.k)
    config = {"command": "stein-factors", "lambda": args.lam, "k": args.k}
    _emit(args, STEIN_COLUMNS, rows, config, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poismd",
        description=(
            "Stein factors and moderate-deviation error bounds for Poisson "
            "approximation of rare-event counts"
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", default=None, help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="Monte Carlo stream seed")
    common.add_argument(
        "--samples", type=int, default=10_000_000, help="Monte Carlo sample count"
    )
    common.add_argument("--grid", default=None, help="comma-separated grid values")
    common.add_argument(
        "--no-plot", action="store_true", help="skip the companion PNG next to the CSV"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "records-figures", parents=[common],
        help="record-count tail ratio curves against four comparator tails",
    )
    p.add_argument("--x", type=float, default=3.0, help="number of standard deviations")
    p.set_defaults(func=_cmd_records_figures)

    p = sub.add_parser(
        "figure5", parents=[common], help="factor-to-naive ratio scan over thresholds"
    )
    p.add_argument("--lam", type=float, default=10.0, help="Poisson mean")
    p.add_argument("--k-min", type=int, default=11)
    p.add_argument("--k-max", type=int, default=43)
    p.set_defaults(func=_cmd_figure5)

    p = sub.add_parser(
        "example2", parents=[common], help="binomial adjusted-ratio limit check"
    )
    p.add_argument("--p", type=float, default=0.3, help="binomial success probability")
    p.add_argument("--x", type=float, default=2.0, help="number of standard deviations")
    p.set_defaults(func=_cmd_example2)

    p = sub.add_parser(
        "validate", parents=[common], help="bound-validity sweep for one application"
    )
    p.add_argument("app", choices=VALIDATE_APPS)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser(
        "conjecture", parents=[common], help="c1_minus - c1_plus gap scan"
    )
    p.add_argument("--lambdas", default="1,5,10", help="comma-separated Poisson means")
    p.add_argument("--k-max-offset", type=int, default=30)
    p.set_defaults(func=_cmd_conjecture)

    p = sub.add_parser(
        "stein-factors", parents=[common], help="factor set at one (lambda, k)"
    )
    p.add_argument("lam", type=float, help="Poisson mean")
    p.add_argument("k", type=int, help="integer threshold, k > lambda")
    p.add_argument(
        "--verify",
        action="store_true",
        help="emit the solved-equation property checks instead of the factor row",
    )
    p.add_argument(
        "--i-max", type=int, default=None, help="solution truncation index (>= k + 10)"
    )
    p.set_defaults(func=_cmd_stein_factors)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

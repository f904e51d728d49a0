#!/usr/bin/env python

"""Find polynomial roots and function zeros with the structured QZ solver."""

import argparse
import csv
import logging
import os
import sys
import time
import warnings
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import yaml

from fastqz._corpus import (
    LAGRANGE_FUNCTIONS,
    lagrange_problem,
    load_corpus,
    random_uniform,
)
from fastqz._corpus import cyclotomic as cyclotomic_problem
from fastqz._errors import CompressionError, NumericalFailure
from fastqz._logger import LEVEL_ENV, get_solver_logger
from fastqz._oracle import backward_error, error_report, in_disk_distance
from fastqz._run_cases import RunReport, run_cases, verdict
from fastqz._verify import SUITES, run_suites
from fastqz.pencils import (
    LagrangeSample,
    Polynomial,
    companion_pencil,
    lagrange_pencil,
    sample_function,
)
from fastqz.solver import EigenResult, SolverConfig, solve

logger = get_solver_logger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_SIZES = [64, 128, 256, 512, 1024, 2048]
NORMS = [1.0, 1e4, 1e8]

DESCRIPTION = """Structured QZ rootfinder for companion-like pencils.

Subcommands:

  roots     roots of a polynomial (coefficient file, inline or corpus)
  lagrange  zeros in the unit disk of a sampled function
  bench     timing series and log-log slope
  verify    property suites and corpus cases
"""

EXAMPLES = """Coefficient files hold whitespace-separated reals, highest degree
first; text after "#" is ignored. Examples::

  fastqz roots --coeffs "1 0 -1"
  fastqz roots poly.txt --report roots.json
  fastqz roots --corpus classic
  fastqz lagrange akt-sin-log -n 100
  fastqz lagrange lambert -n 289 --alpha 1.5
  fastqz bench --sizes 64 128 256 --trials 5 --csv times.csv
  fastqz verify --oracle
"""


class CoefficientParseError(ValueError):
    """A coefficient or sample file line could not be read."""

    def __init__(self, line: int, text: str):
        self.line = line
        super().__init__(f"line {line}: cannot parse {text!r}")


def parse_coefficients(text: str) -> np.ndarray:
    """Coefficients, highest degree first, returned lowest degree first."""
    values: List[float] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        for token in content.split():
            try:
                values.append(float(token))
            except ValueError:
                raise CoefficientParseError(number, token) from None
    if not values:
        raise ValueError("No coefficients found")
    return np.asarray(values[::-1])


def parse_samples(text: str) -> LagrangeSample:
    """Samples as "re im [weight]" lines, node j on the j-th data line."""
    values: List[complex] = []
    weights: List[float] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].split()
        if not content:
            continue
        if len(content) not in (2, 3):
            raise CoefficientParseError(number, raw.strip())
        try:
            numbers = [float(token) for token in content]
        except ValueError:
            raise CoefficientParseError(number, raw.strip()) from None
        values.append(complex(numbers[0], numbers[1]))
        weights.append(numbers[2] if len(numbers) == 3 else 1.0)
    return LagrangeSample(np.asarray(values), np.asarray(weights))


def _format_root(value: complex) -> str:
    return f"{value.real: .17e} {value.imag: .17e}"


def _print_roots(roots: Sequence[complex]) -> None:
    for r in roots:
        print(_format_root(complex(r)))


def _solver_config(args) -> SolverConfig:
    values = {}
    if getattr(args, "config", None):
        values = SolverConfig.from_yaml(args.config).as_dict()
    if getattr(args, "oracle", False):
        values["oracle_mode"] = True
    if getattr(args, "single_shift", False):
        values["shift_mode"] = "auto"
    if getattr(args, "max_sweeps", None):
        values["max_sweeps_per_eig"] = args.max_sweeps
        if values.get("exceptional_after", 15) >= args.max_sweeps:
            values["exceptional_after"] = max(1, args.max_sweeps // 2)
    return SolverConfig.from_mapping(values)


def _write_report(report: RunReport, path: Optional[str]) -> None:
    if path:
        report.write(path)


def _result_record(case_id: str, result: EigenResult, seconds: float) -> dict:
    return {
        "id": case_id,
        "seconds": seconds,
        "sweeps": result.iterations_total,
        "sweeps_per_eig": result.iterations_per_eig,
        "converged": result.converged,
        "n_infinite": result.n_infinite,
        "n_indeterminate": result.n_indeterminate,
        "oracle_residual": result.oracle_residual,
    }


def _corpus_exit(report: RunReport) -> int:
    summary = report.summary()
    print(
        f"{summary['ok']} ok, {summary['failed']} failed, "
        f"{summary['error']} errors"
    )
    for case in report.cases:
        if case["status"] != "ok":
            print(f"{case['status'].upper()} {case['id']}")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_roots(args) -> int:
    """Roots of one polynomial, or of a corpus group."""
    config = _solver_config(args)
    if args.corpus:
        corpus = load_corpus()
        groups = None if args.corpus == "all" else [args.corpus]
        cases = corpus.polynomial_cases(groups, include_slow=args.slow)
        report = run_cases(cases, config)
        _write_report(report, args.report)
        return _corpus_exit(report)

    if args.coeffs is not None:
        text, name = args.coeffs, "inline"
    elif args.source == "-":
        text, name = sys.stdin.read(), "stdin"
    else:
        text, name = Path(args.source).read_text(encoding="utf-8"), args.source
    poly = Polynomial(parse_coefficients(text))
    pencil = companion_pencil(poly, normalize=not args.no_normalize)

    start = time.perf_counter()
    result = solve(pencil, config)
    seconds = time.perf_counter() - start
    roots = result.eigenvalues
    _print_roots(roots)

    record = {
        **_result_record(name, result, seconds),
        "kind": "polynomial",
        "degree": poly.degree,
        "backward_bound": None,
        "forward_bound": None,
    }
    finite = roots[np.isfinite(roots)]
    if result.n_indeterminate == 0 and finite.size:
        # infinite roots stand for the negligible leading coefficients
        record.update(
            error_report(poly.coeffs[: finite.size + 1], finite).as_dict()
        )
    if result.n_infinite:
        logger.warning(
            "%d infinite roots, not part of the backward error",
            result.n_infinite,
        )
    record["status"] = verdict(record)
    extra = {"roots": [[float(r.real), float(r.imag)] for r in roots]}
    _write_report(RunReport([record], config.as_dict(), extra=extra), args.report)
    return EXIT_OK if result.converged else EXIT_FAILURE


def _parse_params(items: Optional[List[str]]) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"Expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = yaml.safe_load(value)
    return params


def cmd_lagrange(args) -> int:
    """Zeros inside the unit disk of a builtin function or of samples."""
    config = _solver_config(args)
    if args.corpus:
        cases = load_corpus().lagrange_cases(include_slow=args.slow)
        report = run_cases(cases, config)
        _write_report(report, args.report)
        return _corpus_exit(report)

    if args.samples:
        sample = parse_samples(Path(args.samples).read_text(encoding="utf-8"))
        reference = None
        name = args.samples
        scale = 1.0
    elif args.function:
        problem = lagrange_problem(
            args.function, args.alpha, **_parse_params(args.param)
        )
        sample = sample_function(problem.function, args.nodes)
        reference = problem.reference
        name = args.function
        scale = args.alpha
    else:
        raise ValueError("Give a function id, --samples or --corpus")

    pencil = lagrange_pencil(sample, config.oracle_mode)
    start = time.perf_counter()
    result = solve(pencil, config)
    seconds = time.perf_counter() - start
    roots = result.finite_eigenvalues()
    inside = roots[np.abs(roots) <= 1.0 + args.tol_disk]
    # back to the unscaled variable
    _print_roots(scale * inside)

    record = {
        **_result_record(name, result, seconds),
        "kind": "lagrange",
        "nodes": sample.n,
        "alpha": scale,
        "size": pencil.n,
        "spurious_removed": sample.n + 1 - pencil.n,
        "in_disk": len(inside),
        "tolerance": None,
        "distance": (
            in_disk_distance(reference, inside)
            if reference is not None
            else None
        ),
    }
    if record["distance"] is not None:
        logger.info("Distance to reference roots: %.3e", record["distance"])
    record["status"] = verdict(record)
    extra = {
        "roots": [
            [float(r.real), float(r.imag)] for r in scale * inside
        ]
    }
    _write_report(RunReport([record], config.as_dict(), extra=extra), args.report)
    return EXIT_OK if result.converged else EXIT_FAILURE


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x; nan for fewer than two
    distinct x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.unique(x).size < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def _bench_series(args, config: SolverConfig) -> List[dict]:
    rng = np.random.default_rng(args.seed)
    rows = []
    for n in args.sizes:
        for trial in range(args.trials):
            if args.mode == "cyclotomic":
                poly = cyclotomic_problem(n).polynomial
            else:
                seed = int(rng.integers(2**31))
                poly = random_uniform(n, seed).polynomial
            pencil = companion_pencil(poly)
            start = time.perf_counter()
            result = solve(pencil, config)
            seconds = time.perf_counter() - start
            rows.append(
                {
                    "mode": args.mode,
                    "n": n,
                    "trial": trial,
                    "seconds": seconds,
                    "sweeps": result.iterations_total,
                    "sweeps_per_eig": result.iterations_per_eig,
                }
            )
            logger.info("N=%d trial %d: %.3fs", n, trial, seconds)
    return rows


def _norms_series(args, config: SolverConfig) -> List[dict]:
    rng = np.random.default_rng(args.seed)
    rows = []
    for norm in NORMS:
        for trial in range(args.trials):
            coeffs = rng.uniform(-1.0, 1.0, args.degree + 1)
            poly = Polynomial(coeffs * norm / np.linalg.norm(coeffs))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = solve(companion_pencil(poly, normalize=False), config)
            roots = result.eigenvalues
            be2 = (
                backward_error(poly.coeffs, roots)[1]
                if np.all(np.isfinite(roots))
                else float("nan")
            )
            rows.append(
                {
                    "mode": "norms",
                    "norm": norm,
                    "trial": trial,
                    "backward_error_2": be2,
                    "sweeps": result.iterations_total,
                }
            )
    return rows


def cmd_bench(args) -> int:
    """Timing series with a fitted log-log slope, as CSV."""
    config = _solver_config(args)
    if args.mode == "norms":
        rows = _norms_series(args, config)
        xs, key = NORMS, "norm"
        metric = "backward_error_2"
    else:
        if min(args.sizes) < 32:
            raise ValueError("Benchmark sizes must be at least 32")
        rows = _bench_series(args, config)
        xs, key = sorted(set(args.sizes)), "n"
        metric = "seconds"

    medians = [
        float(np.nanmedian([r[metric] for r in rows if r[key] == x]))
        for x in xs
    ]
    slope = loglog_slope(xs, medians)

    fieldnames = list(rows[0]) if rows else [key, metric]
    stream = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        writer = csv.DictWriter(stream, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.csv:
            stream.close()
    if np.isnan(slope):
        print("slope undefined (need at least two sizes)")
    else:
        print(f"slope {slope:.3f}")

    extra = {
        "mode": args.mode,
        "series": [{key: x, metric: m} for x, m in zip(xs, medians)],
        "slope": None if np.isnan(slope) else slope,
    }
    _write_report(RunReport([], config.as_dict(), extra=extra), args.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Property suites, then corpus cases when asked."""
    results = run_suites(args.suites, seed=args.seed)
    for r in results:
        state = "ok" if r.passed else "FAILED"
        print(
            f"{state} {r.name}: worst {r.worst:.3e} (bound {r.bound:.1e})"
            + (f" at {r.detail}" if r.detail and not r.passed else "")
        )
    passed = all(r.passed for r in results)

    report = RunReport(
        [], {}, extra={"suites": [r.as_dict() for r in results]}
    )
    if args.corpus:
        config = _solver_config(args)
        corpus = load_corpus()
        cases = corpus.polynomial_cases(include_slow=args.slow)
        cases += corpus.lagrange_cases(include_slow=args.slow)
        report = run_cases(cases, config)
        report.extra["suites"] = [r.as_dict() for r in results]
        passed = _corpus_exit(report) == EXIT_OK and passed
    _write_report(report, args.report)
    return EXIT_OK if passed else EXIT_FAILURE


def _add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--oracle",
        action="store_true",
        help="Replay every sweep on dense matrices and check the result",
    )
    parser.add_argument(
        "--single-shift",
        action="store_true",
        help="Use a linear shift when the trailing eigenvalues are real",
    )
    parser.add_argument(
        "--max-sweeps", type=int, help="Sweep budget per eigenvalue"
    )
    parser.add_argument(
        "--config", type=str, help="YAML file with solver settings"
    )
    parser.add_argument(
        "--report", type=str, help="Write a JSON report to this path"
    )


def _get_parser() -> argparse.ArgumentParser:
    """Construct parser object for fastqz."""

    parser = argparse.ArgumentParser(
        prog="fastqz",
        description=DESCRIPTION,
        epilog=EXAMPLES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Verbose output"
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Debug output, more verbose than --verbose",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    roots = sub.add_parser("roots", help="Roots of a polynomial")
    roots.add_argument(
        "source",
        nargs="?",
        help='Coefficient file, highest degree first ("-" for stdin)',
    )
    roots.add_argument("--coeffs", type=str, help="Inline coefficients")
    roots.add_argument(
        "--corpus",
        choices=["classic", "jenkins_traub", "jumping", "cyclotomic", "all"],
        help="Run a corpus group instead",
    )
    roots.add_argument(
        "--slow", action="store_true", help="Include slow corpus cases"
    )
    roots.add_argument(
        "--no-normalize",
        action="store_true",
        help="Do not scale the polynomial to unit 2-norm",
    )
    _add_solver_arguments(roots)
    roots.set_defaults(func=cmd_roots)

    lagrange = sub.add_parser(
        "lagrange", help="Zeros of a sampled function in the unit disk"
    )
    lagrange.add_argument(
        "function",
        nargs="?",
        choices=sorted(LAGRANGE_FUNCTIONS),
        help="Builtin function id",
    )
    lagrange.add_argument(
        "--samples", type=str, help='Sample file with "re im [weight]" lines'
    )
    lagrange.add_argument(
        "-n", "--nodes", type=int, default=100, help="Number of nodes"
    )
    lagrange.add_argument(
        "--alpha",
        type=float,
        default=1.0,
        help="Variable scaling: zeros in the disk of radius alpha",
    )
    lagrange.add_argument(
        "--param",
        action="append",
        help="Function parameter KEY=VALUE, may be repeated",
    )
    lagrange.add_argument(
        "--tol-disk",
        type=float,
        default=1e-6,
        help="Report roots with |z| <= 1 + tol",
    )
    lagrange.add_argument(
        "--corpus", action="store_true", help="Run the function corpus"
    )
    lagrange.add_argument(
        "--slow", action="store_true", help="Include slow corpus cases"
    )
    _add_solver_arguments(lagrange)
    lagrange.set_defaults(func=cmd_lagrange)

    bench = sub.add_parser("bench", help="Timing and accuracy series")
    bench.add_argument(
        "--mode",
        choices=["random", "cyclotomic", "norms"],
        default="random",
    )
    bench.add_argument(
        "--sizes", type=int, nargs="+", default=DEFAULT_SIZES
    )
    bench.add_argument("--trials", type=int, default=5)
    bench.add_argument(
        "--degree", type=int, default=50, help="Degree for norms mode"
    )
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--csv", type=str, help="CSV output path")
    _add_solver_arguments(bench)
    bench.set_defaults(func=cmd_bench)

    verify = sub.add_parser("verify", help="Property suites")
    verify.add_argument(
        "--suites", nargs="+", choices=sorted(SUITES), help="Suites to run"
    )
    verify.add_argument(
        "--corpus", action="store_true", help="Also run the corpus cases"
    )
    verify.add_argument(
        "--slow", action="store_true", help="Include slow corpus cases"
    )
    verify.add_argument("--seed", type=int, default=0)
    _add_solver_arguments(verify)
    verify.set_defaults(func=cmd_verify)

    return parser


def _check_arguments(args) -> None:
    """Do sanity check of the input arguments."""

    logger.debug("Arguments are: %s", str(vars(args)))
    if args.command == "roots" and not args.corpus:
        if args.source is None and args.coeffs is None:
            raise ValueError("Give a coefficient file, --coeffs or --corpus")
    if args.command == "lagrange" and args.nodes < 2:
        raise ValueError("At least two nodes are needed")
    if getattr(args, "max_sweeps", None) is not None and args.max_sweeps < 2:
        raise ValueError("--max-sweeps must be at least 2")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run a subcommand and return its exit code."""

    parser = _get_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE

    if args.debug:
        logger.setLevel(logging.DEBUG)
    elif args.verbose:
        logger.setLevel(logging.INFO)
    elif not os.environ.get(LEVEL_ENV):
        logger.setLevel(logging.WARNING)

    try:
        _check_arguments(args)
        return args.func(args)
    except NumericalFailure as err:
        logger.error("Numerical failure: %s", err)
        return EXIT_FAILURE
    except CompressionError as err:
        logger.error("Compression failed: %s", err)
        return EXIT_FAILURE
    except (ValueError, KeyError, OSError) as err:
        logger.error("%s", err)
        return EXIT_USAGE


def main() -> None:
    """Entry point from command line."""

    sys.exit(run())


if __name__ == "__main__":
    main()

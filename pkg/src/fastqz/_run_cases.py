"""

Run corpus cases in worker threads and collect a report.

Each case builds its pencil, solves it single-threaded and returns a
record of plain numbers. Verdicts are computed from the records alone, so
a saved report can be re-evaluated offline with :func:`evaluate`.

"""

import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np

from fastqz._corpus import LagrangeCase, PolynomialCase
from fastqz._errors import (
    CompressionError,
    NumericalFailure,
    StructureError,
)
from fastqz._logger import get_solver_logger
from fastqz._oracle import error_report, in_disk_distance
from fastqz.pencils import companion_pencil, lagrange_pencil
from fastqz.solver import SolverConfig, solve

logger = get_solver_logger(__name__)

REPORT_SCHEMA_VERSION = 1
DEFAULT_THREADS = 4


def default_threads() -> int:
    """Worker count from FASTQZ_THREADS, 4 when unset or invalid."""
    value = os.environ.get("FASTQZ_THREADS")
    if value is None:
        return DEFAULT_THREADS
    try:
        threads = int(value)
    except ValueError:
        warnings.warn(f"FASTQZ_THREADS={value!r} is not an integer, using 4")
        return DEFAULT_THREADS
    return max(threads, 1)


def _nan_to_none(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _solve_timed(pencil, config):
    start = time.perf_counter()
    result = solve(pencil, config)
    return result, time.perf_counter() - start


def _run_polynomial_case(case: PolynomialCase, config: SolverConfig) -> dict:
    record = {
        "id": case.case_id,
        "kind": "polynomial",
        "group": case.group,
        "backward_bound": case.backward_bound,
        "forward_bound": case.forward_bound,
    }
    problem = case.problem()
    if case.solver:
        config = SolverConfig.from_mapping({**config.as_dict(), **case.solver})
    pencil = companion_pencil(problem.polynomial)
    result, seconds = _solve_timed(pencil, config)
    roots = result.eigenvalues
    record.update(
        degree=problem.polynomial.degree,
        seconds=seconds,
        sweeps=result.iterations_total,
        sweeps_per_eig=result.iterations_per_eig,
        converged=result.converged,
        n_infinite=result.n_infinite,
        n_indeterminate=result.n_indeterminate,
        oracle_residual=result.oracle_residual,
    )
    if np.all(np.isfinite(roots)):
        report = error_report(
            problem.polynomial.coeffs, roots, problem.reference
        )
        record.update(report.as_dict())
    else:
        record.update(
            forward_error=None, backward_error=None, backward_error_2=None
        )
    return record


def _run_lagrange_case(case: LagrangeCase, config: SolverConfig) -> dict:
    problem = case.problem()
    pencil = lagrange_pencil(case.sample(), config.oracle_mode)
    result, seconds = _solve_timed(pencil, config)
    roots = result.finite_eigenvalues()
    return {
        "id": case.case_id,
        "kind": "lagrange",
        "function": case.function_id,
        "nodes": case.nodes,
        "alpha": case.alpha,
        "tolerance": case.tolerance,
        "size": pencil.n,
        "spurious_removed": case.nodes + 1 - pencil.n,
        "seconds": seconds,
        "sweeps": result.iterations_total,
        "sweeps_per_eig": result.iterations_per_eig,
        "converged": result.converged,
        "n_infinite": result.n_infinite,
        "in_disk": int(np.count_nonzero(np.abs(roots) <= 1.0)),
        "distance": in_disk_distance(problem.reference, roots),
        "oracle_residual": result.oracle_residual,
    }


def _run_case(args) -> dict:
    """Run one case; failures become records with status "error"."""
    case, config = args
    runner = (
        _run_polynomial_case
        if isinstance(case, PolynomialCase)
        else _run_lagrange_case
    )
    try:
        record = runner(case, config)
    except (CompressionError, NumericalFailure, StructureError) as err:
        logger.error("Case %s failed: %s", case.case_id, err)
        record = {"id": case.case_id, "error": str(err)}
    record["status"] = verdict(record)
    return record


def _within(value, bound) -> bool:
    return bound is None or (value is not None and value <= bound)


def verdict(record: dict) -> str:
    """Status of a case record: ok, failed or error."""
    if "error" in record:
        return "error"
    if not record.get("converged", False):
        return "failed"
    if record.get("kind") == "lagrange":
        ok = _within(_nan_to_none(record["distance"]), record["tolerance"])
    else:
        ok = _within(
            record.get("backward_error"), record["backward_bound"]
        ) and _within(
            _nan_to_none(record.get("forward_error")), record["forward_bound"]
        )
    return "ok" if ok else "failed"


@dataclass
class RunReport:
    """Records of a corpus run, ordered by case id."""

    cases: List[dict]
    config: dict
    schema_version: int = REPORT_SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["status"] == "ok" for c in self.cases)

    def summary(self) -> dict:
        counts = {"ok": 0, "failed": 0, "error": 0}
        for c in self.cases:
            counts[c["status"]] += 1
        return counts

    def as_dict(self) -> dict:
        cases = [
            {k: _nan_to_none(v) for k, v in c.items()} for c in self.cases
        ]
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "summary": self.summary(),
            "cases": cases,
            **self.extra,
        }

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as stream:
            json.dump(self.as_dict(), stream, indent=2, sort_keys=True)
        logger.info("Report written to %s", path)


def evaluate(report: dict) -> dict:
    """Recompute every verdict of a loaded report."""
    cases = [{**c, "status": verdict(c)} for c in report["cases"]]
    return {**report, "cases": cases}


def run_cases(
    cases: Iterable[Union[PolynomialCase, LagrangeCase]],
    config: Optional[SolverConfig] = None,
    threads: Optional[int] = None,
) -> RunReport:
    """Run corpus cases in a thread pool and merge the records by case id.

    Args:
        cases: polynomial and function cases, ids must be unique
        config: solver settings, per-case overrides are applied on top
        threads: worker count, default from FASTQZ_THREADS
    """
    config = config or SolverConfig()
    threads = threads or default_threads()
    cases = list(cases)
    logger.info("Running %d cases on %d threads", len(cases), threads)

    # the filter list is process-wide: set it once, outside the workers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with ThreadPoolExecutor(threads) as executor:
            records = list(
                executor.map(_run_case, [(case, config) for case in cases])
            )

    records.sort(key=lambda r: r["id"])
    report = RunReport(records, config.as_dict())
    for record in records:
        if record["status"] != "ok":
            logger.warning("Case %s: %s", record["id"], record["status"])
    logger.info("Corpus run: %s", report.summary())
    return report

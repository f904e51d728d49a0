import json
import warnings

import numpy as np
import pytest

import fastqz._qzstep
from fastqz._corpus import LagrangeCase, PolynomialCase
from fastqz._generators import UNIT_ROUNDOFF
from fastqz._run_cases import (
    DEFAULT_THREADS,
    REPORT_SCHEMA_VERSION,
    RunReport,
    default_threads,
    evaluate,
    run_cases,
    verdict,
)
from fastqz._verify import (
    SUITES,
    compression_suite,
    eigencount_suite,
    equivalence_suite,
    orthogonality_suite,
    rank_suite,
    run_suites,
)
from fastqz.solver import SolverConfig


def _cases():
    return [
        PolynomialCase(
            "quartic",
            "test",
            "roots_range",
            {"start": 1, "stop": 4},
            backward_bound=1e-12,
            forward_bound=1e-10,
        ),
        PolynomialCase(
            "constant", "test", "roots_range", {"start": 1, "stop": 0}
        ),
        PolynomialCase(
            "random",
            "test",
            "random",
            {"degree": 12, "seed": 3},
            backward_bound=1e-12,
        ),
        LagrangeCase("det", "matrix-det", 6, tolerance=1e-8),
    ]


### TESTS ###


def test_default_threads(monkeypatch):
    monkeypatch.delenv("FASTQZ_THREADS", raising=False)
    assert default_threads() == DEFAULT_THREADS
    monkeypatch.setenv("FASTQZ_THREADS", "2")
    assert default_threads() == 2
    monkeypatch.setenv("FASTQZ_THREADS", "0")
    assert default_threads() == 1
    monkeypatch.setenv("FASTQZ_THREADS", "many")
    with pytest.warns(UserWarning, match="not an integer"):
        assert default_threads() == DEFAULT_THREADS


def test_run_cases(tmp_path):
    """Records come back sorted by id; a broken case becomes an error
    record instead of stopping the run."""
    report = run_cases(_cases(), threads=2)
    ids = [r["id"] for r in report.cases]
    assert ids == sorted(ids)
    records = {r["id"]: r for r in report.cases}

    assert records["constant"]["status"] == "error"
    assert "constant" in records["constant"]["error"]

    quartic = records["quartic"]
    assert quartic["status"] == "ok"
    assert quartic["degree"] == 4
    assert quartic["converged"]
    assert quartic["forward_error"] < 1e-10
    assert quartic["seconds"] >= 0.0

    assert np.isnan(records["random"]["forward_error"])
    assert records["random"]["backward_error"] < 1e-12

    det = records["det"]
    assert det["status"] == "ok"
    assert det["in_disk"] == 2
    assert det["distance"] < 1e-8

    assert not report.passed
    assert report.summary() == {"ok": 3, "failed": 0, "error": 1}

    path = tmp_path / "report.json"
    report.write(path)
    loaded = json.loads(path.read_text())
    assert loaded["schema_version"] == REPORT_SCHEMA_VERSION
    assert loaded["config"] == SolverConfig().as_dict()
    assert loaded["cases"][ids.index("random")]["forward_error"] is None
    again = evaluate(loaded)
    assert [c["status"] for c in again["cases"]] == [
        r["status"] for r in report.cases
    ]


def test_run_cases_leaves_warning_filters_alone():
    """Stalled cases warn inside the workers; the caller's filters come
    back unchanged and still see warnings issued afterwards."""
    capped = [
        PolynomialCase(
            f"capped-{seed}",
            "test",
            "random",
            {"degree": 16, "seed": seed},
            solver={"max_sweeps_per_eig": 2, "exceptional_after": 1},
        )
        for seed in range(6)
    ]
    before = list(warnings.filters)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        inner = list(warnings.filters)
        run_cases(capped, threads=3)
        assert warnings.filters == inner
        assert not caught
        warnings.warn("after the run")
    assert [str(w.message) for w in caught] == ["after the run"]
    assert warnings.filters == before


def test_per_case_solver_settings():
    case = PolynomialCase(
        "capped",
        "test",
        "random",
        {"degree": 20, "seed": 1},
        solver={"max_sweeps_per_eig": 3, "exceptional_after": 2},
    )
    report = run_cases([case], SolverConfig(oracle_mode=True), threads=1)
    (record,) = report.cases
    assert record["status"] in ("ok", "failed")
    assert record["oracle_residual"] > 0.0


def test_verdict():
    base = {
        "id": "p",
        "kind": "polynomial",
        "converged": True,
        "backward_bound": 1e-14,
        "forward_bound": None,
        "backward_error": 5e-15,
        "forward_error": None,
    }
    assert verdict(base) == "ok"
    assert verdict({**base, "backward_error": 2e-14}) == "failed"
    assert verdict({**base, "backward_error": None}) == "failed"
    assert verdict({**base, "converged": False}) == "failed"
    assert verdict({**base, "forward_bound": 1e-10, "forward_error": 1e-9}) == (
        "failed"
    )
    assert verdict({"id": "p", "error": "boom"}) == "error"

    lagrange = {
        "id": "f",
        "kind": "lagrange",
        "converged": True,
        "tolerance": 1e-8,
        "distance": 1e-9,
    }
    assert verdict(lagrange) == "ok"
    assert verdict({**lagrange, "distance": 1e-6}) == "failed"
    assert verdict({**lagrange, "distance": float("nan")}) == "failed"


def test_evaluate_is_offline():
    report = RunReport(
        [
            {
                "id": "p",
                "kind": "lagrange",
                "converged": True,
                "tolerance": 1e-8,
                "distance": 1e-9,
                "status": "failed",
            }
        ],
        {},
    )
    assert evaluate(report.as_dict())["cases"][0]["status"] == "ok"


@pytest.mark.parametrize(
    "suite",
    [
        lambda seed: equivalence_suite(seed, trials=1),
        compression_suite,
        rank_suite,
        lambda seed: orthogonality_suite(seed, n=12, sweeps=30),
        eigencount_suite,
    ],
    ids=["equivalence", "compression", "rank", "orthogonality", "eigencount"],
)
def test_suites_pass(suite, seed):
    result = suite(seed)
    assert result.passed, result.detail
    assert result.worst <= result.bound


def test_run_suites():
    (result,) = run_suites(["minimal"])
    assert result.passed
    assert result.as_dict()["name"] == "minimal"
    assert set(SUITES) >= {"equivalence", "rank", "minimal"}
    with pytest.raises(KeyError):
        run_suites(["fastest"])


def test_equivalence_catches_broken_transitions(monkeypatch):
    """A sign error in the generator update does not go unnoticed."""
    original = fastqz._qzstep._transition

    def broken(*args):
        return -original(*args)

    monkeypatch.setattr(fastqz._qzstep, "_transition", broken)
    result = equivalence_suite(0, trials=1)
    assert not result.passed
    assert result.worst > result.bound


def test_orthogonality_over_a_hundred_sweeps():
    result = orthogonality_suite(0, n=20, sweeps=100)
    assert result.bound == pytest.approx(1e2 * 20 * UNIT_ROUNDOFF)
    assert result.passed, result.detail


def test_equivalence_bounds():
    result = equivalence_suite(1, trials=1)
    assert result.passed, result.detail
    assert result.bound == pytest.approx(1e3 * UNIT_ROUNDOFF)

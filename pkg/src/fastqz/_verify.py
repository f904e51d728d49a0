"""

Property suites run by ``fastqz verify``.

Each suite draws a handful of small pencils from a seeded generator,
checks one property against a dense computation and reports the worst
value seen against its bound. A failing suite names the case and, for
sweeps, the sweep index where the bound broke.

"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from fastqz._compression import compress_pencil
from fastqz._errors import NumericalFailure
from fastqz._generators import (
    UNIT_ROUNDOFF,
    GeneratorPencil,
    reconstruct_pair,
    reconstruct_U,
    reconstruct_V,
)
from fastqz._logger import get_solver_logger
from fastqz._oracle import (
    dense_eigenvalues,
    forward_error,
    mirror_discrepancy,
    orthogonality_defect,
)
from fastqz._qzstep import sweep
from fastqz.pencils import (
    Polynomial,
    companion_pencil,
    lagrange_pencil,
    sample_function,
)
from fastqz.solver import SolverConfig, select_shift, solve

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

EQUIVALENCE_SIZES = (8, 16, 32, 50)
EQUIVALENCE_BOUND = 1e3 * UNIT_ROUNDOFF
ANNIHILATION_BOUND = 1e2 * UNIT_ROUNDOFF


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    bound: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "bound": self.bound,
            "detail": self.detail,
        }


def _random_companion(rng: np.random.Generator, n: int) -> GeneratorPencil:
    return companion_pencil(Polynomial(rng.uniform(-1.0, 1.0, n + 1)))


def _relative_rank(block: np.ndarray, tol: float) -> int:
    if block.size == 0:
        return 0
    s = np.linalg.svd(block, compute_uv=False)
    return int(np.count_nonzero(s > tol))


def _shift_annihilation(pencil: GeneratorPencil, shift, q_list) -> float:
    """|entries 2..N of Q^T p(A B^-1) e_1| relative to the vector norm."""
    A, B = reconstruct_pair(pencil)
    x = np.linalg.solve(B, np.eye(pencil.n)[:, 0])
    Ax = A @ x
    y = np.linalg.solve(B, Ax)
    v = shift.alpha * np.eye(pencil.n)[:, 0] + shift.beta * Ax
    if shift.gamma:
        v = v + shift.gamma * (A @ y)
    scale = max(float(np.linalg.norm(v)), np.finfo(float).tiny)
    for offset, R in q_list:
        k = R.shape[0]
        v[offset : offset + k] = R.T @ v[offset : offset + k]
    return float(np.max(np.abs(v[1:]))) / scale


def equivalence_suite(seed: int = 0, trials: int = 3) -> SuiteResult:
    """Generator sweeps match the dense replay of their rotations, and the
    first rotation annihilates the tail of p(A B^-1) e_1.

    The reported worst value is the mirror mismatch; an annihilation above
    its own, tighter bound fails the suite with that value.
    """
    rng = np.random.default_rng(seed)
    bound = EQUIVALENCE_BOUND
    worst = 0.0
    detail = ""
    for n in EQUIVALENCE_SIZES:
        for trial in range(trials):
            pencil = _random_companion(rng, n)
            for sweep_index in range(3):
                shift = select_shift(pencil, "double")
                out = sweep(pencil, shift, keep_log=True)
                residual = mirror_discrepancy(
                    pencil, out.pencil, (out.q_list, out.z_list)
                )
                annihilation = _shift_annihilation(pencil, shift, out.q_list)
                where = f"N={n} trial {trial} sweep {sweep_index}"
                if annihilation > ANNIHILATION_BOUND:
                    return SuiteResult(
                        "equivalence",
                        False,
                        annihilation,
                        ANNIHILATION_BOUND,
                        f"{where}: shift vector not annihilated",
                    )
                if residual > worst:
                    worst = residual
                    detail = where
                if residual > bound:
                    return SuiteResult(
                        "equivalence", False, residual, bound, detail
                    )
                pencil = compress_pencil(out.pencil)
    return SuiteResult("equivalence", True, worst, bound, detail)


def compression_suite(seed: int = 0, trials: int = 5) -> SuiteResult:
    """Recompression keeps the pair, reaches orders (2, 1) and is
    idempotent."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bound = 1e3 * UNIT_ROUNDOFF
    for trial in range(trials):
        n = int(rng.integers(5, 40))
        pencil = _random_companion(rng, n)
        out = sweep(pencil, select_shift(pencil, "double")).pencil
        once = compress_pencil(out)
        twice = compress_pencil(once)
        if max(once.v_gen.orders) > 2 or max(once.u_gen.orders) > 1:
            return SuiteResult(
                "compression",
                False,
                float(max(once.v_gen.orders)),
                2.0,
                f"N={n} trial {trial}: orders not minimal",
            )
        A0, B0 = reconstruct_pair(out)
        A1, B1 = reconstruct_pair(once)
        A2, B2 = reconstruct_pair(twice)
        scale = np.sqrt(n)
        drift = max(np.max(np.abs(A1 - A0)), np.max(np.abs(B1 - B0))) / scale
        again = max(np.max(np.abs(A2 - A1)), np.max(np.abs(B2 - B1))) / scale
        worst = max(worst, float(drift), float(again))
        if worst > bound:
            return SuiteResult(
                "compression", False, worst, bound, f"N={n} trial {trial}"
            )
    return SuiteResult("compression", True, worst, bound)


def rank_suite(seed: int = 0, trials: int = 4) -> SuiteResult:
    """Upper blocks of V stay of rank <= 2 and strictly upper blocks of U
    of rank <= 1 after a sweep, before recompression."""
    rng = np.random.default_rng(seed)
    worst = 0
    for trial in range(trials):
        n = int(rng.integers(6, 50))
        pencil = _random_companion(rng, n)
        out = sweep(pencil, select_shift(pencil, "double")).pencil
        V = reconstruct_V(out.v_gen, out.sigma_v, out.z, out.w)
        U = reconstruct_U(out.u_gen, out.d_u, out.p, out.q)
        tol = 1e3 * UNIT_ROUNDOFF * np.sqrt(n)
        for k in range(n):
            rv = _relative_rank(V[: k + 1, k:], tol)
            ru = _relative_rank(U[:k, k:], tol)
            worst = max(worst, rv, ru + 1)
            if rv > 2 or ru > 1:
                return SuiteResult(
                    "rank",
                    False,
                    float(max(rv, ru)),
                    2.0,
                    f"N={n} trial {trial} block {k}",
                )
    return SuiteResult("rank", True, float(worst), 2.0)


def orthogonality_suite(
    seed: int = 0, n: int = 20, sweeps: int = 100
) -> SuiteResult:
    """V and U stay orthogonal over many consecutive sweeps of the same
    pencil. The bound is 1e2 N u on ||M^T M - I||_F."""
    rng = np.random.default_rng(seed)
    pencil = _random_companion(rng, n)
    bound = 1e2 * n * UNIT_ROUNDOFF
    worst = 0.0
    for index in range(sweeps):
        shift = select_shift(pencil, "double")
        try:
            pencil = compress_pencil(sweep(pencil, shift).pencil)
        except NumericalFailure as err:
            return SuiteResult(
                "orthogonality", False, np.inf, bound, f"sweep {index}: {err}"
            )
        V = reconstruct_V(pencil.v_gen, pencil.sigma_v, pencil.z, pencil.w)
        U = reconstruct_U(pencil.u_gen, pencil.d_u, pencil.p, pencil.q)
        value = max(orthogonality_defect(V), orthogonality_defect(U))
        worst = max(worst, value)
        if value > bound:
            return SuiteResult(
                "orthogonality", False, value, bound, f"sweep {index}"
            )
    return SuiteResult("orthogonality", True, worst, bound)


def eigencount_suite(seed: int = 0, sizes=(8, 13, 24)) -> SuiteResult:
    """Lagrange pencils of a degree N - 1 polynomial lose exactly the two
    spurious infinite eigenvalues, at build time or in the solver."""
    rng = np.random.default_rng(seed)
    for n in sizes:
        poly = Polynomial(rng.uniform(-1.0, 1.0, n))
        pencil = lagrange_pencil(sample_function(poly, n), oracle_mode=True)
        removed = n + 1 - pencil.n
        result = solve(pencil, SolverConfig(oracle_mode=True))
        finite = result.finite_eigenvalues()
        spurious = removed + result.n_infinite
        if spurious != 2 or len(finite) != n - 1:
            return SuiteResult(
                "eigencount",
                False,
                float(spurious),
                2.0,
                f"N={n}: {spurious} infinite, {len(finite)} finite",
            )
    return SuiteResult("eigencount", True, 2.0, 2.0)


def minimal_suite(seed: int = 0) -> SuiteResult:
    """Three-by-three pencils, where a sweep is only its closing phase."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bound = 1e-10
    for trial in range(5):
        pencil = _random_companion(rng, 3)
        out = sweep(pencil, select_shift(pencil, "double"), keep_log=True)
        residual = mirror_discrepancy(
            pencil, out.pencil, (out.q_list, out.z_list)
        )
        A, B = reconstruct_pair(pencil)
        expected = dense_eigenvalues(A, B)
        got = solve(pencil).eigenvalues
        value = max(residual, forward_error(expected, got))
        worst = max(worst, value)
        if value > bound:
            return SuiteResult("minimal", False, value, bound, f"trial {trial}")
    return SuiteResult("minimal", True, worst, bound)


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "equivalence": equivalence_suite,
    "compression": compression_suite,
    "rank": rank_suite,
    "orthogonality": orthogonality_suite,
    "eigencount": eigencount_suite,
    "minimal": minimal_suite,
}


def run_suites(
    names: Optional[List[str]] = None, seed: int = 0
) -> List[SuiteResult]:
    """Run the named suites (all by default) in a fixed order."""
    names = list(SUITES) if names is None else names
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"Unknown suite '{name}'")
        result = SUITES[name](seed=seed)
        level = "passed" if result.passed else "FAILED"
        logger.info(
            "Suite %s %s: worst %.3e (bound %.1e) %s",
            name,
            level,
            result.worst,
            result.bound,
            result.detail,
        )
        results.append(result)
    return results

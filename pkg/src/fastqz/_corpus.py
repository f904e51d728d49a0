"""

Test polynomials and test functions.

The case list lives in ``fastqz/data/corpus.yml``; this module turns its
entries into polynomials, sampled functions and reference roots. Families
and functions are looked up by name in :data:`POLYNOMIAL_FAMILIES` and
:data:`LAGRANGE_FUNCTIONS`.

"""

import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Union

import numpy as np
import scipy.linalg
import yaml
from numpy.polynomial import chebyshev as npcheb
from scipy.special import bernoulli as bernoulli_numbers
from scipy.special import comb, factorial, lambertw

from fastqz._logger import get_solver_logger
from fastqz._oracle import poly_from_roots
from fastqz.pencils import LagrangeSample, Polynomial, sample_function

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

CORPUS_SCHEMA_VERSION = 1

DET_MATRIX = np.array(
    [
        [3.2, 1.5, 0.5, -0.5],
        [-1.6, 0.0, -0.4, 0.6],
        [-2.1, -2.2, 0.2, -0.1],
        [20.7, 9.3, 3.9, -3.4],
    ]
)
DET_MATRIX_EIGENVALUES = np.array([0.2, 0.3, 1.5, -2.0])


class PolynomialProblem(NamedTuple):
    polynomial: Polynomial
    reference: Optional[np.ndarray]


def _from_roots(roots) -> PolynomialProblem:
    roots = np.asarray(roots, dtype=complex)
    return PolynomialProblem(Polynomial(poly_from_roots(roots)), roots)


def roots_range(start: int, stop: int) -> PolynomialProblem:
    """prod (x - k) for k = start..stop."""
    return _from_roots(np.arange(start, stop + 1, dtype=np.float64))


def roots_linspace(start: float, stop: float, num: int) -> PolynomialProblem:
    return _from_roots(np.linspace(start, stop, num))


def roots_powers(base: float, start: int, stop: int) -> PolynomialProblem:
    return _from_roots(base ** np.arange(start, stop + 1, dtype=np.float64))


def exp_taylor(degree: int) -> PolynomialProblem:
    """Truncated exponential series sum x^k / k!."""
    k = np.arange(degree + 1)
    return PolynomialProblem(Polynomial(1.0 / factorial(k, exact=False)), None)


def bernoulli(degree: int) -> PolynomialProblem:
    """Bernoulli polynomial B_n(x) = sum_k C(n, k) B_k x^(n-k)."""
    numbers = bernoulli_numbers(degree)
    coeffs = np.zeros(degree + 1)
    for k in range(degree + 1):
        coeffs[degree - k] = comb(degree, k, exact=False) * numbers[k]
    return PolynomialProblem(Polynomial(coeffs), None)


def geometric(degree: int) -> PolynomialProblem:
    """1 + x + ... + x^N, whose roots are the (N+1)-th roots of unity but 1."""
    k = np.arange(1, degree + 1)
    roots = np.exp(2j * np.pi * k / (degree + 1))
    return PolynomialProblem(Polynomial(np.ones(degree + 1)), roots)


def chebyshev(degree: int) -> PolynomialProblem:
    coeffs = npcheb.cheb2poly(np.eye(degree + 1)[degree])
    k = np.arange(1, degree + 1)
    roots = np.cos((2 * k - 1) * np.pi / (2 * degree)).astype(complex)
    return PolynomialProblem(Polynomial(coeffs), roots)


def cyclotomic(degree: int) -> PolynomialProblem:
    """x^N - 1."""
    coeffs = np.zeros(degree + 1)
    coeffs[0], coeffs[-1] = -1.0, 1.0
    roots = np.exp(2j * np.pi * np.arange(degree) / degree)
    return PolynomialProblem(Polynomial(coeffs), roots)


def jumping(degree: int) -> PolynomialProblem:
    """Coefficients alternating between 1e3 and 1e-9."""
    k = np.arange(degree + 1)
    coeffs = 10.0 ** (6 * (-1.0) ** (k + 1) - 3)
    return PolynomialProblem(Polynomial(coeffs), None)


def jt_p1(a: float) -> PolynomialProblem:
    return _from_roots([a, 1.0, -a])


def jt_p3(r: int) -> PolynomialProblem:
    return _from_roots(10.0 ** -np.arange(1, r + 1, dtype=np.float64))


def jt_p4() -> PolynomialProblem:
    return _from_roots([0.1, 0.1, 0.1, 0.5, 0.6, 0.7])


def jt_p7(a: float) -> PolynomialProblem:
    return _from_roots(
        [0.001, 0.01, 0.1, 0.1 + 1j * a, 0.1 - 1j * a, 1.0, 10.0]
    )


def jt_p10(a: float) -> PolynomialProblem:
    return _from_roots([a, 1.0, 1.0 / a])


def jt_p11(m: int) -> PolynomialProblem:
    """2m - 1 roots on the unit circle around 1 and 2m + 1 roots of
    modulus 0.9 around -1."""
    outer = np.exp(1j * np.pi * np.arange(1 - m, m) / (2 * m))
    inner = 0.9 * np.exp(1j * np.pi * np.arange(m, 3 * m + 1) / (2 * m))
    return _from_roots(np.concatenate([outer, inner]))


def random_uniform(degree: int, seed: int = 0) -> PolynomialProblem:
    """Coefficients drawn uniformly from [-1, 1]."""
    rng = np.random.default_rng(seed)
    return PolynomialProblem(
        Polynomial(rng.uniform(-1.0, 1.0, degree + 1)), None
    )


POLYNOMIAL_FAMILIES: Dict[str, Callable[..., PolynomialProblem]] = {
    "roots_range": roots_range,
    "roots_linspace": roots_linspace,
    "roots_powers": roots_powers,
    "exp_taylor": exp_taylor,
    "bernoulli": bernoulli,
    "geometric": geometric,
    "chebyshev": chebyshev,
    "cyclotomic": cyclotomic,
    "jumping": jumping,
    "jt_p1": jt_p1,
    "jt_p3": jt_p3,
    "jt_p4": jt_p4,
    "jt_p7": jt_p7,
    "jt_p10": jt_p10,
    "jt_p11": jt_p11,
    "random": random_uniform,
}


class LagrangeProblem(NamedTuple):
    """A function of the unscaled variable with its known roots."""

    function: Callable[[complex], complex]
    reference: Optional[np.ndarray]


def sin_log() -> LagrangeProblem:
    """sin(z - 0.3) log(1.2 - z), zeros 0.2 and 0.3 in the unit disk."""
    return LagrangeProblem(
        lambda z: np.sin(z - 0.3) * np.log(1.2 - z),
        np.array([0.2, 0.3], dtype=complex),
    )


def lambert(branches: Optional[int] = None, alpha: float = 1.0):
    """x^6 exp(x^6) = 0.1.

    Each branch W_k(0.1) of the Lambert function gives six roots
    W_k^(1/6) times a sixth root of unity. Branches |k| <= ``branches``
    are enumerated (default enough to cover the disk of radius alpha).
    """
    if branches is None:
        branches = int(np.ceil(alpha**6)) + 2
    sixth = np.exp(1j * np.pi * np.arange(6) / 3)
    roots = []
    for k in range(-branches, branches + 1):
        base = complex(lambertw(0.1, k)) ** (1.0 / 6.0)
        roots.extend(base * sixth)
    return LagrangeProblem(
        lambda x: x**6 * np.exp(x**6) - 0.1, np.asarray(roots)
    )


def _det_function(A: np.ndarray):
    eye = np.eye(A.shape[0])
    return lambda z: np.linalg.det(A.astype(complex) - z * eye)


def matrix_det() -> LagrangeProblem:
    """det(A - z I) for a 4 x 4 matrix with eigenvalues 0.2, 0.3, 1.5, -2."""
    return LagrangeProblem(
        _det_function(DET_MATRIX), DET_MATRIX_EIGENVALUES.astype(complex)
    )


def matrix_det_random(size: int = 100, seed: int = 0) -> LagrangeProblem:
    """det(A - z I) for A with entries uniform in [-1, 1]."""
    A = np.random.default_rng(seed).uniform(-1.0, 1.0, (size, size))
    return LagrangeProblem(_det_function(A), scipy.linalg.eigvals(A))


def companion_linearization(coeffs: List[np.ndarray]):
    """First companion form (A, B) of P(z) = sum_k P_k z^k.

    ``coeffs`` is [P_0, ..., P_d]. The eigenvalues of A - z B are those of
    P.
    """
    d = len(coeffs) - 1
    m = coeffs[0].shape[0]
    A = np.zeros((d * m, d * m))
    for k in range(d):
        A[:m, k * m : (k + 1) * m] = -coeffs[d - 1 - k]
    A[m:, : (d - 1) * m] = np.eye((d - 1) * m)
    B = np.eye(d * m)
    B[:m, :m] = coeffs[d]
    return A, B


def matrix_polynomial(
    size: int = 3, degree: int = 2, seed: int = 0
) -> LagrangeProblem:
    """det P(z) for a real matrix polynomial with uniform random
    coefficients, checked against its companion linearization."""
    rng = np.random.default_rng(seed)
    coeffs = [rng.uniform(-1.0, 1.0, (size, size)) for _ in range(degree + 1)]

    def f(z):
        P = sum(C.astype(complex) * z**k for k, C in enumerate(coeffs))
        return np.linalg.det(P)

    A, B = companion_linearization(coeffs)
    reference = scipy.linalg.eigvals(A, B)
    return LagrangeProblem(f, reference[np.isfinite(reference)])


def _string_matrices(grid: int):
    """Stiffness, mass and end-point matrices of the string on a uniform
    grid of ``grid`` cells, fixed at 0 and free at 1."""
    h = 1.0 / grid
    off = np.ones(grid - 1)
    A = (np.diag(np.full(grid, 2.0)) - np.diag(off, 1) - np.diag(off, -1)) / h
    A[-1, -1] = 1.0 / h
    B = (np.diag(np.full(grid, 4.0)) + np.diag(off, 1) + np.diag(off, -1)) * (
        h / 6.0
    )
    B[-1, -1] = 2.0 * h / 6.0
    C = np.zeros((grid, grid))
    C[-1, -1] = 1.0
    return A, B, C


def string_vibration(
    grid: int = 100, k: float = 2.0, mass: float = 1.0, shift: float = 0.0
) -> LagrangeProblem:
    """Eigenvibrations of a string with an elastically attached mass.

    The function is det(A^-1 K(z + shift)) with
    K(x) = A - x B + k x / (x - k / mass) C, which has the zeros of
    det K and no overflow. Its pole at k / mass must lie outside the unit
    disk around ``shift``. Reference roots come from the quadratic
    eigenproblem (x - k / mass) K(x) v = 0 of the same discretization.
    """
    A, B, C = _string_matrices(grid)
    pole = k / mass
    if abs(pole - shift) <= 1.0:
        warnings.warn(
            f"Pole {pole:g} lies in the unit disk around {shift:g}; "
            "interpolation will miss roots"
        )
    A_inv_B = np.linalg.solve(A, B)
    A_inv_C = np.linalg.solve(A, C)
    eye = np.eye(grid)

    def f(z):
        x = z + shift
        K = eye - x * A_inv_B + (k * x / (x - pole)) * A_inv_C
        return np.linalg.det(K)

    linear, quadratic = companion_linearization(
        [-pole * A, A + pole * B + k * C, -B]
    )
    reference = scipy.linalg.eigvals(linear, quadratic)
    reference = reference[np.isfinite(reference)] - shift
    return LagrangeProblem(f, reference)


LAGRANGE_FUNCTIONS: Dict[str, Callable[..., LagrangeProblem]] = {
    "akt-sin-log": sin_log,
    "sin-log": sin_log,
    "lambert": lambert,
    "matrix-det": matrix_det,
    "matrix-det-random": matrix_det_random,
    "matrix-polynomial": matrix_polynomial,
    "string-vibration": string_vibration,
}


def lagrange_problem(function_id: str, alpha: float = 1.0, **params):
    """Look up a test function and rescale it to the variable w = z / alpha.

    Roots of the returned function inside the unit disk are the roots of
    the original one inside the disk of radius alpha, divided by alpha.

    Raises:
        KeyError: unknown function id.
    """
    if function_id not in LAGRANGE_FUNCTIONS:
        raise KeyError(
            f"Unknown function '{function_id}', expected one of "
            f"{sorted(LAGRANGE_FUNCTIONS)}"
        )
    builder = LAGRANGE_FUNCTIONS[function_id]
    if function_id == "lambert":
        params = {"alpha": alpha, **params}
    problem = builder(**params)
    if alpha == 1.0:
        return problem
    reference = None
    if problem.reference is not None:
        reference = problem.reference / alpha
    f = problem.function
    return LagrangeProblem(lambda w: f(alpha * w), reference)


@dataclass(frozen=True)
class PolynomialCase:
    case_id: str
    group: str
    family: str
    params: Mapping = field(default_factory=dict)
    backward_bound: float = 1e-14
    forward_bound: Optional[float] = None
    solver: Mapping = field(default_factory=dict)
    slow: bool = False

    def problem(self) -> PolynomialProblem:
        if self.family not in POLYNOMIAL_FAMILIES:
            raise KeyError(
                f"Case {self.case_id}: unknown family '{self.family}'"
            )
        return POLYNOMIAL_FAMILIES[self.family](**self.params)


@dataclass(frozen=True)
class LagrangeCase:
    case_id: str
    function_id: str
    nodes: int
    tolerance: float
    alpha: float = 1.0
    params: Mapping = field(default_factory=dict)
    slow: bool = False

    def problem(self) -> LagrangeProblem:
        return lagrange_problem(self.function_id, self.alpha, **self.params)

    def sample(self) -> LagrangeSample:
        return sample_function(self.problem().function, self.nodes)


@dataclass(frozen=True)
class Corpus:
    schema_version: int
    polynomials: Dict[str, List[PolynomialCase]]
    lagrange: List[LagrangeCase]

    def polynomial_cases(
        self, groups: Optional[List[str]] = None, include_slow: bool = True
    ) -> List[PolynomialCase]:
        """Cases of the requested groups (all when None), in file order."""
        names = list(self.polynomials) if groups is None else groups
        out = []
        for name in names:
            if name not in self.polynomials:
                raise KeyError(
                    f"Unknown polynomial group '{name}', expected one of "
                    f"{sorted(self.polynomials)}"
                )
            out += [
                case
                for case in self.polynomials[name]
                if include_slow or not case.slow
            ]
        return out

    def lagrange_cases(self, include_slow: bool = True) -> List[LagrangeCase]:
        return [c for c in self.lagrange if include_slow or not c.slow]


def _polynomial_case(group: str, entry: Mapping) -> PolynomialCase:
    return PolynomialCase(
        case_id=entry["id"],
        group=group,
        family=entry["family"],
        params=dict(entry.get("params") or {}),
        backward_bound=float(entry["backward_bound"]),
        forward_bound=(
            float(entry["forward_bound"]) if "forward_bound" in entry else None
        ),
        solver=dict(entry.get("solver") or {}),
        slow=bool(entry.get("slow", False)),
    )


def _lagrange_case(entry: Mapping) -> LagrangeCase:
    return LagrangeCase(
        case_id=entry["id"],
        function_id=entry["function"],
        nodes=int(entry["nodes"]),
        tolerance=float(entry["tolerance"]),
        alpha=float(entry.get("alpha", 1.0)),
        params=dict(entry.get("params") or {}),
        slow=bool(entry.get("slow", False)),
    )


def load_corpus(path: Optional[Union[str, Path]] = None) -> Corpus:
    """Read a corpus file, by default the one shipped with the package.

    Raises:
        ValueError: the file is not a corpus of a known schema version.
    """
    if path is None:
        text = (
            resources.files("fastqz.data")
            .joinpath("corpus.yml")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ValueError(f"Corpus file is not valid YAML: {err}") from err

    if not isinstance(data, dict) or "schema_version" not in data:
        raise ValueError("Corpus file lacks a schema_version")
    version = data["schema_version"]
    if version != CORPUS_SCHEMA_VERSION:
        raise ValueError(
            f"Corpus schema version {version} is not supported "
            f"(expected {CORPUS_SCHEMA_VERSION})"
        )

    polynomials = {
        group: [_polynomial_case(group, entry) for entry in entries or []]
        for group, entries in (data.get("polynomials") or {}).items()
    }
    lagrange = [_lagrange_case(entry) for entry in data.get("lagrange") or []]

    ids = [c.case_id for cases in polynomials.values() for c in cases]
    ids += [c.case_id for c in lagrange]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        warnings.warn(f"Duplicate corpus case ids: {duplicates}")
    logger.debug(
        "Loaded corpus with %d polynomial and %d function cases",
        len(ids) - len(lagrange),
        len(lagrange),
    )
    return Corpus(version, polynomials, lagrange)

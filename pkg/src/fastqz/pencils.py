"""

Constructors of companion-like pencils.

* :func:`companion_pencil` for a polynomial in the power basis,
* :func:`lagrange_pencil` for samples of a function at the roots of
  unity (barycentric Lagrange interpolation), through an arrowhead
  pencil, its structured Hessenberg/triangular reduction and the row
  permutation that removes the first spurious infinite eigenvalue. The
  dense reduction of the real congruent arrowhead is kept as its
  reference.

"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from fastqz._compression import tri_generators_from_dense
from fastqz._errors import StructureError
from fastqz._generators import (
    MACHINE_EPSILON,
    UNIT_ROUNDOFF,
    GeneratorPencil,
    UpperQsGenerators,
    UpperTriGenerators,
    reconstruct_pair,
)
from fastqz._logger import get_solver_logger
from fastqz._reduction import reduce_arrowhead
from fastqz._rotations import rotation_zero_top

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

SYMMETRY_TOLERANCE = 1e3 * UNIT_ROUNDOFF
DRIFT_TOLERANCE = 1e3 * UNIT_ROUNDOFF
REDUCTION_TOLERANCE = 1e3 * UNIT_ROUNDOFF


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial p_0 + p_1 x + ... + p_N x^N.

    Trailing zero coefficients (vanishing leading terms) are trimmed.

    >>> Polynomial([-1.0, 0.0, 1.0]).degree
    2
    """

    coeffs: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        coeffs = np.trim_zeros(np.asarray(self.coeffs, dtype=np.float64), "b")
        if coeffs.size == 0:
            raise StructureError("Zero polynomial has no roots")
        if not np.all(np.isfinite(coeffs)):
            raise StructureError("Polynomial has non-finite coefficients")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalize(self) -> "Polynomial":
        """Scaled copy with unit 2-norm."""
        return Polynomial(self.coeffs / self.norm, normalized=True)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: float = 1.0):
        """Polynomial with the given roots; complex roots must come in
        conjugate pairs."""
        coeffs = npoly.polyfromroots(np.asarray(roots))
        if np.iscomplexobj(coeffs):
            coeffs = coeffs.real
        return cls(leading * coeffs)

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)


def companion_pencil(poly: Polynomial, normalize: bool = True) -> GeneratorPencil:
    """Companion pencil of a polynomial of degree N >= 1.

    A is the Hessenberg companion matrix with first row
    -(p_{N-1}, ..., p_0) and unit subdiagonal, written as V - e_1 w^T with
    V the cyclic down-shift. B = diag(p_N, 1, ..., 1) = I - e_1 q^T with
    q = (1 - p_N) e_1.

    Raises:
        StructureError: the polynomial is constant.
    """
    if poly.degree < 1:
        raise StructureError("A constant polynomial has no companion pencil")
    if normalize and not poly.normalized:
        poly = poly.normalize()
    p = poly.coeffs
    n = poly.degree
    if abs(p[-1]) <= UNIT_ROUNDOFF * poly.norm:
        warnings.warn(
            "Leading coefficient is negligible; expect infinite eigenvalues"
        )

    g = [np.array([1.0])] + [np.zeros(1) for _ in range(n - 1)]
    h = [np.zeros(1) for _ in range(n - 1)] + [np.array([1.0])]
    b = [np.eye(1) for _ in range(n - 1)]
    w = p[n - 1 :: -1].copy()
    w[-1] += 1.0
    z = np.zeros(n)
    z[0] = 1.0
    d_b = np.ones(n)
    d_b[0] = p[-1]
    q = np.zeros(n)
    q[0] = 1.0 - p[-1]
    return GeneratorPencil(
        sigma_a=np.ones(n - 1),
        v_gen=UpperTriGenerators(tuple(g), tuple(b), tuple(h)),
        d_b=d_b,
        u_gen=UpperQsGenerators.zeros(n),
        z=z,
        w=w,
        p=z.copy(),
        q=q,
    )


@dataclass(frozen=True)
class LagrangeSample:
    """Samples f_j = f(z_j) at the N-th roots of unity z_j = e^{2 pi i j/N}
    with real balancing weights xi_j."""

    values: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        xi = np.asarray(self.xi, dtype=np.float64)
        if values.shape != xi.shape or values.ndim != 1:
            raise StructureError("Samples and weights must be equal-length")
        if values.size < 2:
            raise StructureError("At least two nodes are needed")
        if np.any(xi == 0):
            raise StructureError(
                f"Zero balancing weight at node {int(np.argmin(np.abs(xi)))}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.n) / self.n)

    def interpolant(self) -> Polynomial:
        """Interpolating polynomial of degree < N in the power basis."""
        coeffs = np.fft.fft(self.values) / self.n
        return Polynomial(coeffs.real)


def sample_function(
    f: Callable,
    n: int,
    xi: Optional[Sequence[float]] = None,
    balance: bool = False,
) -> LagrangeSample:
    """Sample f at the n-th roots of unity.

    Weights default to 1. With ``balance`` they are |f_j|^(-1/2) clipped
    to [1e-8, 1e8], taken equal at conjugate nodes.

    Raises:
        StructureError: a sample is not finite or n < 2.
    """
    if n < 2:
        raise StructureError("At least two nodes are needed")
    nodes = np.exp(2j * np.pi * np.arange(n) / n)
    values = np.array([complex(f(z)) for z in nodes])
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise StructureError(
            f"Non-finite sample at node {int(bad[0])} (z = {nodes[bad[0]]:.6g})"
        )
    if xi is None:
        if balance:
            with np.errstate(divide="ignore"):
                xi = np.clip(np.abs(values) ** -0.5, 1e-8, 1e8)
            # conjugate nodes must carry identical weights
            xi = np.minimum(xi, xi[(n - np.arange(n)) % n])
        else:
            xi = np.ones(n)
    return LagrangeSample(values, np.asarray(xi, dtype=np.float64))


def _node_order(n: int):
    """Node indices with conjugate partners adjacent: 0, 1, n-1, 2, n-2..."""
    order = [0]
    for j in range(1, (n + 1) // 2):
        order += [j, n - j]
    if n % 2 == 0:
        order.append(n // 2)
    return order


def _check_symmetry(sample: LagrangeSample):
    n = sample.n
    scale = max(float(np.max(np.abs(sample.values))), 1.0)
    mirror = (n - np.arange(n)) % n
    defect = np.abs(sample.values[mirror] - np.conj(sample.values))
    worst = int(np.argmax(defect))
    if defect[worst] > SYMMETRY_TOLERANCE * n * scale:
        raise StructureError(
            f"Samples at nodes {worst} and {int(mirror[worst])} are not "
            f"conjugate (defect {defect[worst]:.3e})"
        )
    if np.any(sample.xi[mirror] != sample.xi):
        raise StructureError("Balancing weights must be symmetric")
    return mirror


def real_arrowhead(sample: LagrangeSample):
    """Real congruent form of the arrowhead pencil, first row and column
    scaled to unit norm.

    Returns (F1, G1), both (N+1) x (N+1). F1 is [[0, r^T], [c, M]] with M
    block diagonal of 1 x 1 and 2 x 2 rotation blocks; G1 = diag(0, I).

    Raises:
        StructureError: samples or weights break the real symmetry
            f(conj z) = conj f(z).
    """
    n = sample.n
    z = sample.nodes
    row = -sample.values / sample.xi
    col = (z / n) * sample.xi
    mirror = _check_symmetry(sample)

    r = np.zeros(n)
    c = np.zeros(n)
    M = np.zeros((n, n))
    root2 = np.sqrt(2.0)
    order = _node_order(n)
    pos = 0
    while pos < n:
        j = order[pos]
        if mirror[j] == j:
            r[pos], c[pos], M[pos, pos] = row[j].real, col[j].real, z[j].real
            pos += 1
            continue
        r[pos : pos + 2] = root2 * row[j].real, -root2 * row[j].imag
        c[pos : pos + 2] = root2 * col[j].real, root2 * col[j].imag
        M[pos : pos + 2, pos : pos + 2] = [
            [z[j].real, -z[j].imag],
            [z[j].imag, z[j].real],
        ]
        pos += 2

    norm_r, norm_c = np.linalg.norm(r), np.linalg.norm(c)
    if norm_r == 0.0:
        raise StructureError("All samples vanish")
    F1 = np.zeros((n + 1, n + 1))
    F1[0, 1:] = r / norm_r
    F1[1:, 0] = c / norm_c
    F1[1:, 1:] = M
    G1 = np.eye(n + 1)
    G1[0, 0] = 0.0
    return F1, G1


def _arrowhead_pencil(first_row, sigma, v_gen, u) -> GeneratorPencil:
    """Pencil (M - e_1 (M[0] - u)^T, diag(0, I)) of the trailing block."""
    size = u.size
    z = np.zeros(size)
    z[0] = 1.0
    d_b = np.ones(size)
    d_b[0] = 0.0
    return GeneratorPencil(
        sigma_a=np.asarray(sigma, dtype=np.float64).copy(),
        v_gen=v_gen,
        d_b=d_b,
        u_gen=UpperQsGenerators.zeros(size),
        z=z,
        w=first_row - u,
        p=z.copy(),
        q=z.copy(),
    )


def hessenberg_triangular_reduce(
    F1: np.ndarray, G1: np.ndarray, threshold: Optional[float] = None
) -> GeneratorPencil:
    """Dense reduction of a real arrowhead pair, O(N^3).

    F1 is brought to Hessenberg form by an orthogonal similarity 1 + Q,
    which leaves G1 = diag(0, I) unchanged and keeps the trailing block
    orthogonal. Swapping the first two rows then splits off one infinite
    eigenvalue. The swap is repeated while |A(0, 0)| < threshold (default
    eps sqrt(N)), each time after rotating the first two rows of the
    orthogonal part. :func:`lagrange_pencil` checks its structured
    reduction against this one in oracle mode.

    Raises:
        StructureError: G1 is not diag(0, I) or F1 has a nonzero corner.
    """
    F1 = np.asarray(F1, dtype=np.float64)
    m = F1.shape[0]
    expected = np.eye(m)
    expected[0, 0] = 0.0
    if not np.array_equal(np.asarray(G1), expected) or F1[0, 0] != 0.0:
        raise StructureError("Expected an arrowhead pair with G = diag(0, I)")
    n = m - 1
    if threshold is None:
        threshold = MACHINE_EPSILON * np.sqrt(n)

    H = scipy.linalg.hessenberg(F1)
    M = H[1:, 1:].copy()
    u = H[0, 1:].copy()
    removed = 1
    while M.shape[0] > 1 and abs(u[0]) < threshold:
        R = rotation_zero_top(M[0, 0], M[1, 0])
        M[0:2] = R.T @ M[0:2]
        M = M[1:, 1:].copy()
        u = u[1:].copy()
        removed += 1
    logger.info("Dense reduction removed %d infinite eigenvalues", removed)
    return _arrowhead_pencil(
        M[0], np.diag(M, -1), tri_generators_from_dense(M, 2), u
    )


def structured_reduce(
    sample: LagrangeSample, threshold: Optional[float] = None
) -> GeneratorPencil:
    """Structured reduction of the arrowhead pencil of ``sample``, O(N^2).

    Same pencil as :func:`hessenberg_triangular_reduce` applied to
    :func:`real_arrowhead`, up to the signs of rows and columns. The
    orthogonal part is never assembled: Givens rotations act on its
    factored form and on the row and weight vectors, and the trailing
    orthogonal Hessenberg block comes out with order-one generators.
    Infinite eigenvalues are split off the same way as in the dense
    reduction, updating one generator per swap.

    Raises:
        StructureError: the samples break the real symmetry.
    """
    n = sample.n
    _check_symmetry(sample)
    if threshold is None:
        threshold = MACHINE_EPSILON * np.sqrt(n)
    row = -sample.values / sample.xi
    col = (sample.nodes / n) * sample.xi
    norm_r = np.linalg.norm(row)
    if norm_r == 0.0:
        raise StructureError("All samples vanish")
    red = reduce_arrowhead(
        sample.nodes, col / np.linalg.norm(col), row / norm_r
    )
    if red.drift > DRIFT_TOLERANCE * np.sqrt(n):
        warnings.warn(
            f"Structured reduction lost the real structure: "
            f"imaginary drift {red.drift:.3e}"
        )

    g, b, h, sigma, u = (
        red.g.copy(),
        red.b.copy(),
        red.h.copy(),
        red.sigma.copy(),
        red.u.copy(),
    )
    removed = 1
    while g.size > 1 and abs(u[0]) < threshold:
        R = rotation_zero_top(g[0] * h[0], sigma[0])
        # row 1 after the rotation shares the tail b[1] ... of row 0
        g[1] = R[0, 1] * g[0] * b[0] + R[1, 1] * g[1]
        g, b, h, sigma, u = g[1:], b[1:], h[1:], sigma[1:], u[1:]
        removed += 1
    logger.info(
        "Structured reduction removed %d infinite eigenvalues", removed
    )

    first_row = g[0] * np.concatenate(([1.0], np.cumprod(b))) * h
    v_gen = UpperTriGenerators(
        tuple(np.array([x]) for x in g),
        tuple(np.array([[x]]) for x in b),
        tuple(np.array([x]) for x in h),
    )
    return _arrowhead_pencil(first_row, sigma, v_gen, u)


def reduction_discrepancy(
    first: GeneratorPencil, second: GeneratorPencil
) -> float:
    """Largest entrywise gap between |A| of two reductions, relative to
    ||A||_F; infinite when they removed different numbers of infinite
    eigenvalues. Absolute values hide the sign freedom of the reduction.
    """
    if first.n != second.n:
        return np.inf
    A1, B1 = reconstruct_pair(first)
    A2, B2 = reconstruct_pair(second)
    scale = max(float(np.linalg.norm(A2)), 1.0)
    gap = max(
        float(np.max(np.abs(np.abs(A1) - np.abs(A2)))),
        float(np.max(np.abs(B1 - B2))),
    )
    return gap / scale


def lagrange_pencil(
    sample: LagrangeSample, oracle_mode: bool = False
) -> GeneratorPencil:
    """Pencil whose finite eigenvalues are the roots of the interpolant of
    the samples.

    Its size is at most N; the N + 1 - size infinite eigenvalues removed
    while building are not part of it. With ``oracle_mode`` the
    structured reduction is compared with the dense one and a gap above
    N times the reduction tolerance is reported as a warning.
    """
    pencil = structured_reduce(sample)
    if oracle_mode:
        dense = hessenberg_triangular_reduce(*real_arrowhead(sample))
        gap = reduction_discrepancy(pencil, dense)
        logger.debug("Structured and dense reductions differ by %.3e", gap)
        if gap > REDUCTION_TOLERANCE * sample.n:
            warnings.warn(
                f"Structured reduction differs from the dense one by {gap:.3e}"
            )
    return pencil

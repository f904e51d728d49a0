"""

Reference checks independent of the generator arithmetic.

* the dense mirror replays logged rotations on full matrices,
* error metrics rebuild a polynomial from computed roots in double-word
  (compensated) arithmetic and compare coefficients,
* root lists are matched before forward errors are taken.

"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from fastqz._errors import StructureError
from fastqz._generators import GeneratorPencil, reconstruct_pair
from fastqz._logger import get_solver_logger

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class ErrorReport:
    """Accuracy of one computed root set.

    ``forward_error`` is NaN when no reference roots were given.
    ``matching[i]`` is the index of the computed root paired with
    reference root i.
    """

    forward_error: float
    backward_error: float
    backward_error_2: float
    matching: Tuple[int, ...] = ()

    def as_dict(self) -> dict:
        return {
            "forward_error": self.forward_error,
            "backward_error": self.backward_error,
            "backward_error_2": self.backward_error_2,
        }


def dense_mirror_sweep(
    A: np.ndarray,
    B: np.ndarray,
    q_list: Sequence[Tuple[int, np.ndarray]],
    z_list: Sequence[Tuple[int, np.ndarray]],
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (Q^T A Z, Q^T B Z) for the logged embedded rotations.

    Left and right factors commute, so the logs are replayed one after
    the other: Q_0, Q_1, ... on rows and Z_0, Z_1, ... on columns.
    """
    A = np.array(A, dtype=np.float64)
    B = np.array(B, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise StructureError(f"Pair shapes {A.shape}, {B.shape} differ")
    for offset, R in q_list:
        k = R.shape[0]
        if offset + k > n:
            raise StructureError(f"Rotation at {offset} overhangs size {n}")
        A[offset : offset + k] = R.T @ A[offset : offset + k]
        B[offset : offset + k] = R.T @ B[offset : offset + k]
    for offset, R in z_list:
        k = R.shape[0]
        if offset + k > n:
            raise StructureError(f"Rotation at {offset} overhangs size {n}")
        A[:, offset : offset + k] = A[:, offset : offset + k] @ R
        B[:, offset : offset + k] = B[:, offset : offset + k] @ R
    return A, B


def mirror_discrepancy(before: GeneratorPencil, after, logs) -> float:
    """Largest entrywise difference between the structured result and the
    dense mirror, relative to the Frobenius norms of A and B.

    ``logs`` is a (q_list, z_list) pair.
    """
    A, B = reconstruct_pair(before)
    A_m, B_m = dense_mirror_sweep(A, B, *logs)
    A_s, B_s = reconstruct_pair(after)
    scale_a = max(np.linalg.norm(A), 1.0)
    scale_b = max(np.linalg.norm(B), 1.0)
    return max(
        float(np.max(np.abs(A_m - A_s))) / scale_a,
        float(np.max(np.abs(B_m - B_s))) / scale_b,
    )


def dense_eigenvalues(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of a small dense pair, infinite as inf."""
    alpha, beta = scipy.linalg.eigvals(A, B, homogeneous_eigvals=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(beta != 0, alpha / np.where(beta != 0, beta, 1), np.inf)
    return out.astype(complex)


def two_sum(a, b):
    """Error-free sum: a + b = s + e exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Error-free product by Dekker splitting: a * b = p + e exactly."""
    p = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(b)
    e = a_lo * b_lo - (((p - a_hi * b_hi) - a_lo * b_hi) - a_hi * b_lo)
    return p, e


def poly_from_roots(roots: Sequence[complex]) -> np.ndarray:
    """Coefficients (ascending) of prod (x - r) in double-word arithmetic.

    Real and imaginary parts are carried as (high, low) pairs. Conjugate
    root sets give a real result; the imaginary residue is dropped.
    """
    roots = np.asarray(roots, dtype=complex)
    re_hi, re_lo = np.ones(1), np.zeros(1)
    im_hi, im_lo = np.zeros(1), np.zeros(1)
    for r in roots:
        rr, ri = r.real, r.imag
        # c[j-1] and c[j] for j = 0..k+1
        pre_hi, cur_hi = np.append(0.0, re_hi), np.append(re_hi, 0.0)
        pim_hi, cim_hi = np.append(0.0, im_hi), np.append(im_hi, 0.0)
        pre_lo, cur_lo = np.append(0.0, re_lo), np.append(re_lo, 0.0)
        pim_lo, cim_lo = np.append(0.0, im_lo), np.append(im_lo, 0.0)

        p1, e1 = two_prod(rr, cur_hi)
        p2, e2 = two_prod(ri, cim_hi)
        s1, e3 = two_sum(p1, -p2)
        t1, e4 = two_sum(pre_hi, -s1)
        lo1 = (
            pre_lo
            - (rr * cur_lo - ri * cim_lo)
            + e4
            - (e1 - e2 + e3)
        )

        p3, e5 = two_prod(rr, cim_hi)
        p4, e6 = two_prod(ri, cur_hi)
        s2, e7 = two_sum(p3, p4)
        t2, e8 = two_sum(pim_hi, -s2)
        lo2 = pim_lo - (rr * cim_lo + ri * cur_lo) + e8 - (e5 + e6 + e7)

        re_hi, re_lo = two_sum(t1, lo1)
        im_hi, im_lo = two_sum(t2, lo2)
    return re_hi + re_lo


def backward_error(
    coeffs: Sequence[float], roots: Sequence[complex]
) -> Tuple[float, float]:
    """Coefficient backward errors of computed roots.

    Returns (max-norm error, optimally scaled 2-norm error). For the first
    both polynomials are scaled to unit 2-norm with matching leading sign.
    The second is min over real a of ||p - a p~||_2 with p as given.

    Raises:
        StructureError: the root count differs from the degree.
    """
    p = np.trim_zeros(np.asarray(coeffs, dtype=np.float64), "b")
    if len(roots) != len(p) - 1:
        raise StructureError(
            f"{len(roots)} roots for a polynomial of degree {len(p) - 1}"
        )
    rebuilt = poly_from_roots(roots)
    p_unit = p / np.linalg.norm(p)
    r_unit = rebuilt / np.linalg.norm(rebuilt)
    if np.sign(r_unit[-1]) != np.sign(p_unit[-1]):
        r_unit = -r_unit
    be = float(np.max(np.abs(p_unit - r_unit)))
    scale = float(p @ rebuilt) / float(rebuilt @ rebuilt)
    be2 = float(np.linalg.norm(p - scale * rebuilt))
    return be, be2


def match_roots(
    reference: Sequence[complex], computed: Sequence[complex]
) -> Tuple[int, ...]:
    """Pair each reference root with a computed one.

    Greedy nearest pairing, checked against a linear assignment; the one
    with the smaller largest distance wins.

    Raises:
        StructureError: the lists have different lengths.
    """
    ref = np.asarray(reference, dtype=complex)
    got = np.asarray(computed, dtype=complex)
    if ref.shape != got.shape:
        raise StructureError(
            f"Cannot match {len(ref)} reference roots to {len(got)}"
        )
    if ref.size == 0:
        return ()
    dist = np.abs(ref[:, None] - got[None, :])
    greedy = _greedy(dist)
    rows, cols = linear_sum_assignment(dist)
    assigned = np.empty(len(ref), dtype=int)
    assigned[rows] = cols
    if _worst(dist, assigned) < _worst(dist, greedy):
        return tuple(int(i) for i in assigned)
    return tuple(int(i) for i in greedy)


def _greedy(dist: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    out = np.full(n, -1)
    taken = np.zeros(n, dtype=bool)
    order = np.argsort(dist, axis=None)
    for flat in order:
        i, j = divmod(int(flat), n)
        if out[i] < 0 and not taken[j]:
            out[i] = j
            taken[j] = True
    return out


def _worst(dist, matching) -> float:
    return float(np.max(dist[np.arange(len(matching)), matching]))


def forward_error(
    reference: Sequence[complex], computed: Sequence[complex]
) -> float:
    """Largest distance between matched roots."""
    if len(reference) == 0 and len(computed) == 0:
        return 0.0
    matching = match_roots(reference, computed)
    ref = np.asarray(reference, dtype=complex)
    got = np.asarray(computed, dtype=complex)
    return float(np.max(np.abs(ref - got[list(matching)])))


def error_report(
    coeffs: Sequence[float],
    roots: Sequence[complex],
    reference: Optional[Sequence[complex]] = None,
) -> ErrorReport:
    be, be2 = backward_error(coeffs, roots)
    if reference is None:
        return ErrorReport(float("nan"), be, be2)
    matching = match_roots(reference, roots)
    fe = forward_error(reference, roots)
    return ErrorReport(fe, be, be2, matching)


def in_disk_distance(
    reference: Sequence[complex],
    computed: Sequence[complex],
    radius: float = 1.0,
) -> float:
    """Largest distance from a reference root inside the disk to the
    nearest computed root. NaN when no reference root lies inside."""
    ref = np.asarray([r for r in reference if abs(r) < radius], dtype=complex)
    got = np.asarray(computed, dtype=complex)
    got = got[np.isfinite(got)]
    if ref.size == 0:
        return float("nan")
    if got.size == 0:
        return float("inf")
    return float(np.max(np.min(np.abs(ref[:, None] - got[None, :]), axis=1)))


def orthogonality_defect(M: np.ndarray) -> float:
    return float(np.linalg.norm(M.T @ M - np.eye(M.shape[0])))

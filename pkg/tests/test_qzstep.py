import numpy as np
import pytest

from fastqz import NumericalFailure, ShiftPoly, StructureError, sweep
from fastqz._compression import compress_pencil
from fastqz._generators import (
    UNIT_ROUNDOFF,
    GeneratorPencil,
    UpperQsGenerators,
    reconstruct_pair,
)
from fastqz._oracle import dense_eigenvalues, forward_error, mirror_discrepancy
from fastqz._qzstep import chase_infinite, shift_vector
from fastqz._verify import _shift_annihilation
from fastqz.pencils import lagrange_pencil, sample_function
from fastqz.solver import select_shift


def _dense_shift_vector(pencil, shift):
    A, B = reconstruct_pair(pencil)
    M = A @ np.linalg.inv(B)
    e1 = np.eye(pencil.n)[:, 0]
    return shift.alpha * e1 + shift.beta * M @ e1 + shift.gamma * M @ M @ e1


def _diagonal_b_pencil(pencil, k):
    """Same A, B diagonal with a zero at (k, k)."""
    n = pencil.n
    d = np.ones(n)
    d[k] = 0.0
    return GeneratorPencil(
        pencil.sigma_a,
        pencil.v_gen,
        d,
        UpperQsGenerators.zeros(n),
        pencil.z,
        pencil.w,
        np.zeros(n),
        np.zeros(n),
    )


### TESTS ###


def test_shift_poly_constructors():
    assert ShiftPoly.single(2.0)(2.0) == 0.0
    double = ShiftPoly.double(1.0 + 2.0j)
    assert double.degree == 2
    assert abs(double(1.0 + 2.0j)) < 1e-14
    pair = ShiftPoly.from_real_pair(0.5, -3.0)
    assert pair(0.5) == pytest.approx(0.0)
    assert pair(-3.0) == pytest.approx(0.0)
    assert ShiftPoly.single(1.0).degree == 1
    with pytest.raises(StructureError):
        ShiftPoly(0.0, 0.0, 0.0)
    with pytest.raises(StructureError):
        ShiftPoly(np.nan, 1.0, 0.0)


def test_shift_vector_matches_dense(random_companion, seed):
    pencil = random_companion(10, seed=seed)
    for shift in (ShiftPoly.single(0.3), ShiftPoly.double(0.2 + 0.7j)):
        dense = _dense_shift_vector(pencil, shift)
        s = shift_vector(pencil, shift)
        np.testing.assert_allclose(s, dense[:3], atol=1e-12)
        np.testing.assert_allclose(dense[3:], 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 8, 16, 33])
def test_sweep_matches_dense_mirror(random_companion, n):
    """The generator sweep equals Q^T (A, B) Z for its own rotations and
    its first left rotation reduces p(A B^-1) e_1 to a multiple of e_1."""
    pencil = random_companion(n, seed=n)
    for _ in range(3):
        shift = select_shift(pencil, "double")
        out = sweep(pencil, shift, keep_log=True)
        residual = mirror_discrepancy(
            pencil, out.pencil, (out.q_list, out.z_list)
        )
        assert residual < 1e3 * UNIT_ROUNDOFF
        assert (
            _shift_annihilation(pencil, shift, out.q_list)
            <= 1e2 * UNIT_ROUNDOFF
        )
        pencil = compress_pencil(out.pencil)


def test_single_shift_sweep(random_companion):
    pencil = random_companion(9, seed=3)
    out = sweep(pencil, ShiftPoly.single(0.5), keep_log=True)
    assert (
        mirror_discrepancy(pencil, out.pencil, (out.q_list, out.z_list))
        < 1e3 * UNIT_ROUNDOFF
    )


def test_sweep_keeps_eigenvalues(random_companion):
    pencil = random_companion(12, seed=5)
    before = dense_eigenvalues(*reconstruct_pair(pencil))
    out = compress_pencil(sweep(pencil, select_shift(pencil)).pencil)
    after = dense_eigenvalues(*reconstruct_pair(out))
    assert forward_error(before, after) < 1e-10


def test_sweep_rejects_small_pencils(random_companion):
    pencil = random_companion(2)
    with pytest.raises(StructureError):
        sweep(pencil, ShiftPoly.double(1.0j))


def test_shift_vector_needs_nonzero_b():
    """An infinite eigenvalue at the top blocks the shifted sweep."""
    pencil = lagrange_pencil(sample_function(lambda z: z**3 - 0.1, 6))
    assert pencil.d_b[0] == 0.0
    with pytest.raises(NumericalFailure):
        shift_vector(pencil, ShiftPoly.single(0.0))


@pytest.mark.parametrize("k", [0, 2, 5])
def test_infinite_chase_moves_zero_down(random_companion, k):
    """The zero of B at (k, k) ends at the bottom; the dense replay of
    the logged rotations agrees."""
    pencil = _diagonal_b_pencil(random_companion(8, seed=k), k)
    out = chase_infinite(pencil, k, keep_log=True)
    result = out.pencil
    assert result.d_b[-1] == 0.0
    assert result.sigma_a[-1] == 0.0
    assert (
        mirror_discrepancy(pencil, result, (out.q_list, out.z_list)) < 1e-12
    )

    A, B = reconstruct_pair(pencil)
    A1, B1 = reconstruct_pair(result)
    expected = dense_eigenvalues(A, B)
    finite = expected[np.abs(expected) < 1e8]
    leading = dense_eigenvalues(A1[:-1, :-1], B1[:-1, :-1])
    assert forward_error(finite, leading) < 1e-9


@pytest.mark.parametrize("n", [64, 128, 256])
def test_sweep_operations_are_linear(random_companion, n):
    """One rotation per chase position: the first left one, N - 1 column
    and N - 2 row rotations."""
    pencil = random_companion(n, seed=1)
    out = sweep(pencil, select_shift(pencil, "double"))
    assert out.operations == 2 * n - 2

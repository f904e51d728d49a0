from fractions import Fraction

import numpy as np
import pytest

from fastqz import StructureError
from fastqz._oracle import (
    backward_error,
    dense_eigenvalues,
    dense_mirror_sweep,
    error_report,
    forward_error,
    in_disk_distance,
    match_roots,
    orthogonality_defect,
    poly_from_roots,
    two_prod,
    two_sum,
)
from fastqz._rotations import zero_tail3

### TESTS ###


def test_error_free_transformations():
    """s + e and p + e are exact, checked in rational arithmetic."""
    pairs = [(1.0, 1e-17), (0.1, 0.2), (1e16, -3.7), (np.pi, np.e)]
    for a, b in pairs:
        s, e = two_sum(a, b)
        assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)
        p, e = two_prod(a, b)
        assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_poly_from_roots():
    np.testing.assert_array_equal(
        poly_from_roots([1.0, 2.0, 3.0]), [-6.0, 11.0, -6.0, 1.0]
    )
    coeffs = poly_from_roots([1j, -1j, 0.5])
    assert not np.iscomplexobj(coeffs)
    np.testing.assert_allclose(coeffs, [-0.5, 1.0, -0.5, 1.0], atol=1e-16)
    np.testing.assert_array_equal(poly_from_roots([]), [1.0])


def test_poly_from_roots_wilkinson():
    """Coefficients of prod (x - k), k = 1..20, to full precision."""
    coeffs = poly_from_roots(np.arange(1.0, 21.0))
    exact = [1]
    for k in range(1, 21):
        exact = [0] + exact
        for i in range(len(exact) - 1):
            exact[i] -= k * exact[i + 1]
    for got, want in zip(coeffs, exact):
        assert got == pytest.approx(want, rel=1e-15)


def test_backward_error():
    coeffs = [-6.0, 11.0, -6.0, 1.0]
    be, be2 = backward_error(coeffs, [1.0, 2.0, 3.0])
    assert be == 0.0
    assert be2 == 0.0

    be, be2 = backward_error(coeffs, [1.0, 2.0, 3.0 + 1e-6])
    assert 0.0 < be < 1e-6
    assert be2 > 0.0
    # sign of the leading coefficient is irrelevant
    assert backward_error([6.0, -11.0, 6.0, -1.0], [1.0, 2.0, 3.0])[0] == 0.0

    with pytest.raises(StructureError):
        backward_error(coeffs, [1.0, 2.0])


def test_match_roots():
    ref = [0.0, 1.0, 1.0 + 1e-3]
    got = [1.0 + 1.1e-3, -1e-4, 1.0]
    matching = match_roots(ref, got)
    assert sorted(matching) == [0, 1, 2]
    assert matching[0] == 1
    assert forward_error(ref, got) == pytest.approx(1e-4)
    assert forward_error([], []) == 0.0
    with pytest.raises(StructureError):
        match_roots([0.0], [0.0, 1.0])


def test_greedy_loses_to_assignment():
    """Greedy pairing takes the closest pair first and strands the other
    root; the linear assignment is used instead."""
    ref = [0.0, 1.0]
    got = [0.6, 2.0]
    assert match_roots(ref, got) == (0, 1)
    assert forward_error(ref, got) == pytest.approx(1.0)

    ref = [0.0, 0.5]
    got = [0.45, -0.5]
    assert match_roots(ref, got) == (1, 0)
    assert forward_error(ref, got) == pytest.approx(0.5)


def test_error_report():
    report = error_report([-6.0, 11.0, -6.0, 1.0], [3.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    assert report.forward_error == 0.0
    assert report.matching == (1, 2, 0)
    assert set(report.as_dict()) == {
        "forward_error",
        "backward_error",
        "backward_error_2",
    }
    assert np.isnan(error_report([-1.0, 1.0], [1.0]).forward_error)


def test_in_disk_distance():
    ref = [0.5, 0.9j, 2.0]
    got = [0.5 + 1e-9, 0.9j, np.inf, 7.0]
    assert in_disk_distance(ref, got) == pytest.approx(1e-9)
    assert np.isnan(in_disk_distance([2.0, 3.0], got))
    assert in_disk_distance([0.1], [np.inf]) == np.inf
    assert in_disk_distance([1.5], [1.5], radius=2.0) == 0.0


def test_dense_eigenvalues_marks_infinite():
    lam = dense_eigenvalues(np.diag([2.0, 3.0]), np.diag([1.0, 0.0]))
    assert lam[np.isfinite(lam)] == pytest.approx([2.0])
    assert np.sum(np.isinf(lam)) == 1


def test_dense_mirror_sweep(rng):
    A = rng.standard_normal((5, 5))
    B = rng.standard_normal((5, 5))
    R = zero_tail3(rng.standard_normal(3))
    S = zero_tail3(rng.standard_normal(3))
    A1, B1 = dense_mirror_sweep(A, B, [(1, R)], [(2, S)])
    Q = np.eye(5)
    Q[1:4, 1:4] = R
    Z = np.eye(5)
    Z[2:5, 2:5] = S
    np.testing.assert_allclose(A1, Q.T @ A @ Z, atol=1e-14)
    np.testing.assert_allclose(B1, Q.T @ B @ Z, atol=1e-14)

    with pytest.raises(StructureError, match="overhangs"):
        dense_mirror_sweep(A, B, [(3, R)], [])
    with pytest.raises(StructureError, match="differ"):
        dense_mirror_sweep(A, B[:4, :4], [], [])


def test_orthogonality_defect(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    assert orthogonality_defect(Q) < 1e-14
    assert orthogonality_defect(2.0 * Q) == pytest.approx(3.0 * np.sqrt(6.0))

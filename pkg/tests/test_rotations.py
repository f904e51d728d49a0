import numpy as np
import pytest

from fastqz import StructureError
from fastqz._rotations import (
    apply_cols,
    apply_rows,
    givens,
    givens_matrix,
    rotation_zero_left,
    rotation_zero_top,
    zero_col3,
    zero_row_pattern,
    zero_tail3,
)


def _assert_orthogonal(R):
    np.testing.assert_allclose(R.T @ R, np.eye(R.shape[0]), atol=1e-15)


def test_givens():
    c, s, r = givens(3.0, -4.0)
    assert r == pytest.approx(5.0)
    np.testing.assert_allclose(
        givens_matrix(c, s) @ [3.0, -4.0], [5.0, 0.0], atol=1e-15
    )
    assert givens(0.0, 0.0) == (1.0, 0.0, 0.0)


def test_two_by_two_rotations():
    R = rotation_zero_top(1.0, 2.0)
    _assert_orthogonal(R)
    out = R.T @ [1.0, 2.0]
    assert out[0] == pytest.approx(np.sqrt(5.0))
    assert out[1] == pytest.approx(0.0, abs=1e-15)

    R = rotation_zero_left(-2.0, 0.5)
    _assert_orthogonal(R)
    out = np.array([-2.0, 0.5]) @ R
    assert out[0] == pytest.approx(0.0, abs=1e-15)
    assert out[1] == pytest.approx(np.hypot(2.0, 0.5))


def test_zero_tail3(rng):
    """Two rotations bring a 3-vector onto its first coordinate."""
    v = rng.standard_normal(3)
    R = zero_tail3(v)
    _assert_orthogonal(R)
    out = R.T @ v
    np.testing.assert_allclose(out[1:], 0.0, atol=1e-15)
    assert abs(out[0]) == pytest.approx(np.linalg.norm(v))

    # built from two plane rotations
    assert R[0, 2] == 0.0

    R, surviving = zero_col3(v)
    assert surviving == pytest.approx((R.T @ v)[0])
    np.testing.assert_array_equal(zero_tail3([2.0, 0.0, 0.0]), np.eye(3))


def test_zero_row_pattern(rng):
    """Column rotations clear B(1, 0), B(1, 1) and B(0, 0) of a 2x3 block."""
    M = rng.standard_normal((2, 3))
    R = zero_row_pattern(M)
    _assert_orthogonal(R)
    out = M @ R
    assert out[1, 0] == pytest.approx(0.0, abs=1e-14)
    assert out[1, 1] == pytest.approx(0.0, abs=1e-14)
    assert out[0, 0] == pytest.approx(0.0, abs=1e-14)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(M))


def test_apply_in_place(rng):
    R = zero_tail3(rng.standard_normal(3))
    big = np.eye(6)
    big[2:5, 2:5] = R

    X = rng.standard_normal((6, 6))
    Y = X.copy()
    apply_rows(R, Y, 2)
    np.testing.assert_allclose(Y, big.T @ X, atol=1e-14)
    Y = X.copy()
    apply_cols(R, Y, 2)
    np.testing.assert_allclose(Y, X @ big, atol=1e-14)



def test_apply_rejects_overhanging_window(rng):
    R = zero_tail3(rng.standard_normal(3))
    X = rng.standard_normal((4, 4))
    with pytest.raises(StructureError, match="overhangs"):
        apply_rows(R, X, 2)
    with pytest.raises(StructureError, match="overhangs"):
        apply_cols(R, X, -1)

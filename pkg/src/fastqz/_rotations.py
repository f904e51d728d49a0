"""Givens rotations and 3x3 products of two of them.

Rotations are plain arrays. A ``Rot2`` is a 2x2 Givens rotation; a
``Rot3`` is a 3x3 product of plane rotations; from :func:`zero_tail3` it
is the rotation in coordinates (1, 2) followed by the one in (0, 1), so
its (0, 2) entry is exactly zero. Placing either at an offset of an
N-vector or block is :func:`apply_rows` or :func:`apply_cols`.
"""

from typing import Tuple

import numpy as np

from fastqz._errors import StructureError

# pylint: disable=C0103 # allow non-snake case variable names

Rot2 = np.ndarray
Rot3 = np.ndarray


def givens(a: float, b: float) -> Tuple[float, float, float]:
    """Return (c, s, r) with [[c, s], [-s, c]] @ [a, b] = [r, 0].

    r is non-negative. A zero vector gives the identity.
    """
    r = float(np.hypot(a, b))
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


def givens_matrix(c: float, s: float) -> np.ndarray:
    return np.array([[c, s], [-s, c]])


def rotation_zero_top(a: float, b: float) -> np.ndarray:
    """2x2 R with R^T @ [a, b] = [r, 0], r >= 0."""
    c, s, _ = givens(a, b)
    return givens_matrix(c, s).T


def rotation_zero_left(a: float, b: float) -> np.ndarray:
    """2x2 R acting on columns with [a, b] @ R = [0, r], r >= 0."""
    c, s, _ = givens(b, a)
    return np.array([[c, s], [-s, c]])


def _plane(c: float, s: float, i: int, j: int) -> np.ndarray:
    """3x3 rotation acting on coordinates i, j (as applied from the left)."""
    out = np.eye(3)
    out[i, i] = c
    out[i, j] = s
    out[j, i] = -s
    out[j, j] = c
    return out


def zero_tail3(v: np.ndarray) -> Rot3:
    """Orthogonal R with R^T @ v = (+-||v||, 0, 0).

    Built from two Givens rotations: entry 2 against entry 1, then entry 1
    against entry 0. The identity is returned when v[1] = v[2] = 0.
    """
    v = np.asarray(v, dtype=np.float64)
    if v[1] == 0.0 and v[2] == 0.0:
        return np.eye(3)
    c2, s2, r2 = givens(v[1], v[2])
    c1, s1, _ = givens(v[0], r2)
    G = _plane(c1, s1, 0, 1) @ _plane(c2, s2, 1, 2)
    return G.T


def zero_col3(v: np.ndarray) -> Tuple[Rot3, float]:
    """Like :func:`zero_tail3`, also returning the surviving entry."""
    R = zero_tail3(v)
    return R, float((R.T @ np.asarray(v, dtype=np.float64))[0])


def zero_row_pattern(M: np.ndarray) -> Rot3:
    """Orthogonal R (3x3) acting on columns with (M @ R)[1, :2] = 0 and
    (M @ R)[0, 0] = 0.

    M is 2x3. Three plane rotations are needed: columns (0, 1) clear
    M[1, 0], columns (1, 2) clear M[1, 1], then columns (0, 1) clear
    M[0, 0] without touching row 1, whose first two entries are zero.
    """
    W = np.array(M, dtype=np.float64)
    R = np.eye(3)
    for row, (i, j) in ((1, (1, 0)), (1, (2, 1)), (0, (1, 0))):
        # rotate columns i and j so that W[row, j] vanishes
        c, s, _ = givens(W[row, i], W[row, j])
        G = np.eye(3)
        G[i, i] = c
        G[j, i] = s
        G[i, j] = -s
        G[j, j] = c
        W = W @ G
        R = R @ G
        W[row, j] = 0.0
    return R


def _check_window(k: int, offset: int, size: int) -> None:
    if offset < 0 or offset + k > size:
        raise StructureError(
            f"Rotation of size {k} at {offset} overhangs dimension {size}"
        )


def apply_rows(R: np.ndarray, X: np.ndarray, offset: int = 0) -> None:
    """Embed R at ``offset`` and apply it from the left, in place: rows
    offset.. of X become R^T @ those rows.

    Raises:
        StructureError: the window overhangs X.
    """
    k = R.shape[0]
    _check_window(k, offset, X.shape[0])
    X[offset : offset + k] = R.T @ X[offset : offset + k]


def apply_cols(R: np.ndarray, X: np.ndarray, offset: int = 0) -> None:
    """Embed R at ``offset`` and apply it from the right, in place:
    columns offset.. of X become those columns @ R.

    Raises:
        StructureError: the window overhangs X.
    """
    k = R.shape[0]
    _check_window(k, offset, X.shape[1])
    X[:, offset : offset + k] = X[:, offset : offset + k] @ R

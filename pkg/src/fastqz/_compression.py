"""

Recompression of generator representations.

A sweep returns generators whose orders exceed the ranks the orthogonal
factors actually have. Two passes restore minimal orders: a forward
pass makes the row bases orthonormal with small QR factorizations, then
a backward pass truncates the column side with small SVDs. Both cost
O(N r^3).

"""

from dataclasses import replace
from typing import List, Optional

import numpy as np

from fastqz._errors import CompressionError
from fastqz._generators import (
    UNIT_ROUNDOFF,
    GeneratorPencil,
    UpperQsGenerators,
    UpperTriGenerators,
)
from fastqz._logger import get_solver_logger

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

DEFAULT_TAU = 1e2 * UNIT_ROUNDOFF
DRIFT_FACTOR = 1e2


def _orthonormalize_rows(gen: UpperTriGenerators):
    """Forward pass. Returns (g, b, h) lists with orthonormal row bases
    and the Frobenius norm of the upper triangle."""
    n = gen.n
    g: List[np.ndarray] = []
    b: List[np.ndarray] = []
    h: List[np.ndarray] = []
    R_prev = None
    norm2 = 0.0
    for k in range(n):
        if k == 0:
            M = gen.g[0][None, :]
        else:
            M = np.vstack([R_prev @ gen.b[k - 1], gen.g[k][None, :]])
        Qk, Rk = np.linalg.qr(M, mode="reduced")
        if k > 0:
            rho_prev = R_prev.shape[0]
            b.append(Qk[:rho_prev])
            g.append(Qk[rho_prev])
        else:
            g.append(Qk[0])
        hk = Rk @ gen.h[k]
        h.append(hk)
        norm2 += float(hk @ hk)
        R_prev = Rk
    return g, b, h, float(np.sqrt(norm2))


def compress_upper_tri(
    gen: UpperTriGenerators,
    target_order: int = 2,
    tau: float = DEFAULT_TAU,
    norm: Optional[float] = None,
    drift: float = 0.0,
) -> UpperTriGenerators:
    """Return generators of the same upper triangle with orders at most
    ``target_order``.

    Singular values at or below ``tau * ||X||_F`` are discarded, ``norm``
    replacing ||X||_F when given. Orders never grow and at least one is
    kept per index. With ``drift`` > 0, singular values beyond the target
    order are also dropped while they stay below ``drift`` times the
    cutoff; each such truncation is logged as a warning.

    Raises:
        CompressionError: a block has more than ``target_order``
            singular values above the (drift-widened) cutoff.
    """
    n = gen.n
    g, b, h, fro = _orthonormalize_rows(gen)
    tol = tau * (fro if norm is None else norm)
    worst_drift = 0.0

    new_g: List[np.ndarray] = [None] * n
    new_b: List[np.ndarray] = [None] * max(n - 1, 0)
    new_h: List[np.ndarray] = [None] * n
    L_next = None
    for k in range(n - 1, -1, -1):
        if k == n - 1:
            M = h[k][:, None]
        else:
            M = np.hstack([h[k][:, None], b[k] @ L_next])
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
        kept = int(np.count_nonzero(S > tol))
        if kept > target_order:
            if S[target_order] > drift * tol:
                raise CompressionError(k, S[target_order], target_order)
            worst_drift = max(worst_drift, float(S[target_order]))
            kept = target_order
        kept = max(kept, 1)
        L_k = U[:, :kept] * S[:kept]
        new_h[k] = Vt[:kept, 0].copy()
        if k < n - 1:
            new_b[k] = Vt[:kept, 1:].copy()
        new_g[k] = g[k] @ L_k
        L_next = L_k
    out = UpperTriGenerators(tuple(new_g), tuple(new_b), tuple(new_h))
    if worst_drift > 0.0:
        logger.warning(
            "Rank drift truncated to order %d: singular value %.3e, cutoff %.3e",
            target_order,
            worst_drift,
            tol,
        )
    logger.debug(
        "Compressed tri generators of size %d: orders %s -> %s",
        n,
        max(gen.orders),
        max(out.orders),
    )
    return out


def compress_upper_qs(
    gen: UpperQsGenerators,
    target_order: int = 1,
    tau: float = DEFAULT_TAU,
    norm: Optional[float] = None,
    drift: float = 0.0,
) -> UpperQsGenerators:
    """Quasiseparable counterpart of :func:`compress_upper_tri`.

    The strictly upper part of an N x N matrix is the upper triangle of
    its (N-1) x (N-1) block shifted one column to the right, so the same
    passes apply.
    """
    if gen.n <= 1:
        return gen
    return UpperQsGenerators.from_shifted_tri(
        compress_upper_tri(
            gen.as_shifted_tri(), target_order, tau, norm, drift
        )
    )


def tri_generators_from_dense(
    X: np.ndarray,
    target_order: int = 2,
    tau: float = DEFAULT_TAU,
) -> UpperTriGenerators:
    """Minimal upper triangular generators of a dense matrix's upper
    triangle, O(N^2 r^2).

    Columns are swept left to right keeping an orthonormal basis of the
    rows seen so far and the coefficients of the remaining columns in it.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    tol = tau * float(np.linalg.norm(np.triu(X)))
    g = [np.array([1.0])]
    b = []
    C = X[0:1, :].copy()
    h = [C[:, 0].copy()]
    for k in range(n - 1):
        M = np.vstack([C[:, 1:], X[k + 1 : k + 2, k + 1 :]])
        U, S, Wt = np.linalg.svd(M, full_matrices=False)
        kept = int(np.count_nonzero(S > tol))
        if kept > target_order:
            raise CompressionError(k + 1, S[target_order], target_order)
        kept = max(kept, 1)
        rho = C.shape[0]
        b.append(U[:rho, :kept].copy())
        g.append(U[rho, :kept].copy())
        C = S[:kept, None] * Wt[:kept]
        h.append(C[:, 0].copy())
    return UpperTriGenerators(tuple(g), tuple(b), tuple(h))


def compress_pencil(
    pencil: GeneratorPencil,
    tau: float = DEFAULT_TAU,
    drift: float = DRIFT_FACTOR,
) -> GeneratorPencil:
    """Recompress V to order 2 and U to order 1.

    The cutoffs are relative to the bounds sqrt(N) + ||z|| ||w|| and
    sqrt(N) + ||p|| ||q|| on ||A||_F and ||B||_F: the generators of V and
    U are updated through A and B, so they carry rounding errors of that
    size.
    """
    return replace(
        pencil,
        v_gen=compress_upper_tri(
            pencil.v_gen, 2, tau, pencil.scale_a(), drift
        ),
        u_gen=compress_upper_qs(
            pencil.u_gen, 1, tau, pencil.scale_b(), drift
        ),
    )

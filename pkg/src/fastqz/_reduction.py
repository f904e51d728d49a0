"""

Structured Hessenberg reduction of the Lagrange arrowhead.

The orthogonal part of the arrowhead is diagonal in the nodes. It is
kept as a descending chain of 2 x 2 unitary cores A_0 A_1 ... A_{n-2}
followed by a diagonal D, which is exactly the shape of a unitary
Hessenberg matrix. Nodes enter one at a time at the front of the chain.
The rotation that merges the new column weight into the old one is
pushed through D and turned over against the next two cores, which
leaves a single rotation one plane further down; that rotation is
removed by a similarity and the step repeats until the last core
absorbs it. Every rotation also acts on the weight vector and on the
row vector, so one insertion costs O(n) and the reduction O(N^2).

Conjugate nodes make every core at most 2 x 2 when the chain is
complex. A final diagonal phase similarity makes the subdiagonal
positive, after which the matrix and the row vector are real; their
leftover imaginary parts are reported as bookkeeping drift.

"""

from dataclasses import dataclass

import numpy as np

from fastqz._errors import StructureError
from fastqz._logger import get_solver_logger

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)


@dataclass(frozen=True)
class ReducedArrowhead:
    """Real orthogonal Hessenberg M and row vector u.

    M[j + 1, j] = sigma[j]; for i <= j, M[i, j] = g[i] b[i] ... b[j-1] h[j].
    ``drift`` is the largest imaginary part discarded by the phase fix.
    """

    sigma: np.ndarray
    g: np.ndarray
    b: np.ndarray
    h: np.ndarray
    u: np.ndarray
    drift: float

    @property
    def n(self) -> int:
        return self.g.size

    def dense(self) -> np.ndarray:
        n = self.n
        M = np.diag(self.sigma, -1)
        for i in range(n):
            s = self.g[i]
            M[i, i] = s * self.h[i]
            for j in range(i + 1, n):
                s *= self.b[j - 1]
                M[i, j] = s * self.h[j]
        return M


def _merge(a: complex, b: complex) -> np.ndarray:
    """Unitary X with X^H (a, b) = (||(a, b)||, 0)."""
    norm = np.hypot(abs(a), abs(b))
    if norm == 0.0:
        return np.eye(2, dtype=complex)
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]]) / norm


def _embed(X: np.ndarray, at: int) -> np.ndarray:
    out = np.eye(3, dtype=complex)
    out[at : at + 2, at : at + 2] = X
    return out


def turnover(A: np.ndarray, B: np.ndarray, C: np.ndarray):
    """Refactor A(0,1) B(1,2) C(0,1) as L(1,2) A'(0,1) B'(1,2).

    Returns (L, A', B'); all six are 2 x 2 unitary.
    """
    T = _embed(A, 0) @ _embed(B, 1) @ _embed(C, 0)
    R = _merge(np.conj(T[0, 1]), np.conj(T[0, 2]))
    S = T @ _embed(R, 1)
    top = np.array(
        [[S[0, 0], S[0, 1]], [-np.conj(S[0, 1]), np.conj(S[0, 0])]]
    )
    L = (S @ _embed(top, 0).conj().T)[1:, 1:]
    return L, top, R.conj().T


class CoreChain:
    """Unitary Hessenberg matrix A_0 ... A_{n-2} D with the weight and row
    vectors of the arrowhead, filled from the last node backwards."""

    def __init__(self, n: int):
        self.n = n
        self.cores = np.tile(np.eye(2, dtype=complex), (max(n - 1, 0), 1, 1))
        self.diag = np.ones(n, dtype=complex)
        self.col = np.zeros(n, dtype=complex)
        self.row = np.zeros(n, dtype=complex)
        self.top = n
        self.turnovers = 0

    def _pass_right(self, p: int, X: np.ndarray):
        """Rewrite H X, X on plane p, as Y H' with Y on plane p + 1.
        Returns Y, or None when the last core absorbs X."""
        d = self.diag[p : p + 2]
        X = d[:, None] * X * np.conj(d)[None, :]
        if p == self.n - 2:
            self.cores[p] = self.cores[p] @ X
            return None
        L, self.cores[p], self.cores[p + 1] = turnover(
            self.cores[p], self.cores[p + 1], X
        )
        self.turnovers += 1
        return L

    def insert(self, node: complex, weight: complex, entry: complex):
        """Put a node in front of the chain and restore Hessenberg form
        with the weight vector along e_1."""
        if self.top == 0:
            raise StructureError("Core chain is full")
        k = self.top - 1
        self.top = k
        self.diag[k] = node
        self.col[k] = weight
        self.row[k] = entry
        if k == self.n - 1:
            return
        X = _merge(self.col[k], self.col[k + 1])
        self.col[k : k + 2] = X.conj().T @ self.col[k : k + 2]
        self.col[k + 1] = 0.0
        self.row[k : k + 2] = self.row[k : k + 2] @ X
        self.cores[k] = X.conj().T @ self.cores[k]
        Y = self._pass_right(k, X)
        p = k + 1
        while Y is not None:
            # the weight vector is zero on planes below the front
            self.row[p : p + 2] = self.row[p : p + 2] @ Y
            Y = self._pass_right(p, Y)
            p += 1

    def real_form(self) -> ReducedArrowhead:
        """Phase similarity making the subdiagonal positive."""
        if self.top != 0:
            raise StructureError(
                f"Core chain holds {self.n - self.top} of {self.n} nodes"
            )
        n = self.n
        A = self.cores
        d = self.diag
        sub = d[:-1] * A[:, 1, 0]
        beta = A[:, 0, 1]

        def phases(x):
            mag = np.abs(x)
            unit = np.where(mag > 0.0, x / np.where(mag > 0.0, mag, 1.0), 1.0)
            return np.concatenate(([1.0 + 0j], np.cumprod(unit)))

        phi = phases(sub)
        turn = phases(beta)
        delta = np.concatenate(([1.0 + 0j], A[:, 1, 1]))
        g = np.conj(phi) * delta * np.conj(turn)
        h = np.concatenate((A[:, 0, 0], [1.0 + 0j])) * d * phi * turn
        u = self.row * phi
        drift = max(
            float(np.max(np.abs(g.imag), initial=0.0)),
            float(np.max(np.abs(h.imag), initial=0.0)),
            float(np.max(np.abs(u.imag), initial=0.0)),
        )
        logger.debug(
            "Core chain of size %d: %d turnovers, phase drift %.3e",
            n,
            self.turnovers,
            drift,
        )
        return ReducedArrowhead(
            sigma=np.abs(sub),
            g=g.real.copy(),
            b=np.abs(beta),
            h=h.real.copy(),
            u=u.real.copy(),
            drift=drift,
        )


def reduce_arrowhead(
    nodes: np.ndarray, col: np.ndarray, row: np.ndarray
) -> ReducedArrowhead:
    """Hessenberg form of [[0, row], [col, diag(nodes)]] under 1 + Q, with
    Q^H col = ||col|| e_1, in O(N^2).

    ``nodes`` must be unimodular and closed under conjugation with
    ``col`` and ``row`` conjugate on conjugate nodes, so that the result
    is real.
    """
    nodes = np.asarray(nodes, dtype=complex)
    n = nodes.size
    if n == 0 or np.asarray(col).size != n or np.asarray(row).size != n:
        raise StructureError("Nodes and vectors must have the same size")
    chain = CoreChain(n)
    for j in range(n - 1, -1, -1):
        chain.insert(nodes[j], col[j], row[j])
    return chain.real_form()

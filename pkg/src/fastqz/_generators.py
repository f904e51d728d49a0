"""

Generator representation of companion-like matrix pencils.

A pencil (A, B) is stored through the subdiagonal of A, upper triangular
generators of the orthogonal matrix V = A + z w^T, the diagonal of B,
upper quasiseparable generators of the orthogonal matrix U = B + p q^T
and the four perturbation vectors. Dense reconstruction is O(N^2 r) and
exists for tests and the reference oracle only.

"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from fastqz._errors import StructureError
from fastqz._logger import get_solver_logger

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

UNIT_ROUNDOFF = np.finfo(np.float64).eps / 2
MACHINE_EPSILON = np.finfo(np.float64).eps


def _as_tuple(arrays, ndim):
    out = []
    for a in arrays:
        arr = np.asarray(a, dtype=np.float64)
        if arr.ndim != ndim:
            arr = arr.reshape((-1,) if ndim == 1 else (arr.shape[0], -1))
        out.append(arr)
    return tuple(out)


def block_diag_one(b: np.ndarray) -> np.ndarray:
    """Return diag(b, 1)."""
    rows, cols = b.shape
    out = np.zeros((rows + 1, cols + 1))
    out[:rows, :cols] = b
    out[rows, cols] = 1.0
    return out


@dataclass(frozen=True)
class UpperTriGenerators:
    """Upper triangular generators, main diagonal included.

    Entry (i, j) with i <= j equals ``g[i] @ b[i] @ ... @ b[j-1] @ h[j]``.
    ``g[i]`` and ``h[i]`` have length ``orders[i]`` and ``b[k]`` has shape
    ``(orders[k], orders[k+1])``. Orders may be zero.
    """

    g: Tuple[np.ndarray, ...]
    b: Tuple[np.ndarray, ...]
    h: Tuple[np.ndarray, ...]

    def __post_init__(self):
        n = len(self.g)
        if len(self.h) != n or len(self.b) != max(n - 1, 0):
            raise StructureError(
                f"Generator list lengths do not chain: g={len(self.g)}, "
                f"b={len(self.b)}, h={len(self.h)}"
            )
        for i in range(n):
            if self.h[i].shape != self.g[i].shape:
                raise StructureError(
                    f"Index {i}: g has width {self.g[i].shape} "
                    f"but h has height {self.h[i].shape}"
                )
        for k in range(n - 1):
            expected = (self.g[k].shape[0], self.g[k + 1].shape[0])
            if self.b[k].shape != expected:
                raise StructureError(
                    f"Index {k}: b has shape {self.b[k].shape}, "
                    f"expected {expected}"
                )

    @classmethod
    def from_lists(cls, g: Sequence, b: Sequence, h: Sequence):
        """Build from nested sequences, coercing to float arrays."""
        return cls(_as_tuple(g, 1), _as_tuple(b, 2), _as_tuple(h, 1))

    @property
    def n(self) -> int:
        return len(self.g)

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(gi.shape[0] for gi in self.g)

    def entry(self, i: int, j: int) -> float:
        """Entry (i, j), i <= j, in O((j - i) r^2)."""
        s = self.g[i]
        for k in range(i, j):
            s = s @ self.b[k]
        return float(s @ self.h[j])

    def diagonal(self) -> np.ndarray:
        return np.array([gi @ hi for gi, hi in zip(self.g, self.h)])

    def dense(self) -> np.ndarray:
        """Upper triangle (diagonal included) as a dense array."""
        n = self.n
        out = np.zeros((n, n))
        for i in range(n):
            s = self.g[i]
            out[i, i] = s @ self.h[i]
            for j in range(i + 1, n):
                s = s @ self.b[j - 1]
                out[i, j] = s @ self.h[j]
        return out

    def window(self, lo: int, hi: int) -> "UpperTriGenerators":
        """Generators of the diagonal block with indices lo..hi-1."""
        if not 0 <= lo < hi <= self.n:
            raise StructureError(f"Window [{lo}, {hi}) outside size {self.n}")
        return UpperTriGenerators(
            self.g[lo:hi], self.b[lo : hi - 1], self.h[lo:hi]
        )

    def flipped(self) -> "UpperTriGenerators":
        """Generators of the upper part of P X^T P, P the reversal."""
        return UpperTriGenerators(
            tuple(reversed(self.h)),
            tuple(bk.T for bk in reversed(self.b)),
            tuple(reversed(self.g)),
        )

    def add_rank_one(
        self, x: np.ndarray, y: np.ndarray, sign: float = 1.0
    ) -> "UpperTriGenerators":
        """Generators of the upper part of X + sign * x y^T (order + 1)."""
        return UpperTriGenerators(
            tuple(np.append(gi, sign * xi) for gi, xi in zip(self.g, x)),
            tuple(block_diag_one(bk) for bk in self.b),
            tuple(np.append(hj, yj) for hj, yj in zip(self.h, y)),
        )

    def strict_upper(self) -> "UpperQsGenerators":
        """Quasiseparable generators of the strictly upper part."""
        n = self.n
        return UpperQsGenerators(
            tuple(self.g[i] @ self.b[i] for i in range(n - 1)),
            tuple(self.b[1:]),
            tuple(self.h[1:]),
        )

    def frobenius_norm(self) -> float:
        """Frobenius norm of the upper triangle, O(N r^3)."""
        total = 0.0
        gram = None
        for j in range(self.n):
            gj = np.outer(self.g[j], self.g[j])
            gram = gj if gram is None else self.b[j - 1].T @ gram @ self.b[
                j - 1
            ] + gj
            total += float(self.h[j] @ gram @ self.h[j])
        return float(np.sqrt(max(total, 0.0)))


@dataclass(frozen=True)
class UpperQsGenerators:
    """Upper quasiseparable generators of a strictly upper part.

    Entry (i, j) with i < j equals ``g[i] @ b[i+1] @ ... @ b[j-1] @ h[j]``.
    Storage is shifted by one for columns and transitions: the column
    generator h(j) lives at ``h[j-1]`` and the transition b(k) at
    ``b[k-1]``. With that shift the lists chain exactly like
    :class:`UpperTriGenerators` of size N - 1, the upper triangle of
    U(0:N-1, 1:N).
    """

    g: Tuple[np.ndarray, ...]
    b: Tuple[np.ndarray, ...]
    h: Tuple[np.ndarray, ...]

    def __post_init__(self):
        # validates the chain
        self.as_shifted_tri()

    @classmethod
    def from_lists(cls, g: Sequence, b: Sequence, h: Sequence):
        return cls(_as_tuple(g, 1), _as_tuple(b, 2), _as_tuple(h, 1))

    @classmethod
    def zeros(cls, n: int, order: int = 1) -> "UpperQsGenerators":
        """Generators of a zero strictly upper part."""
        m = max(n - 1, 0)
        return cls(
            tuple(np.zeros(order) for _ in range(m)),
            tuple(np.eye(order) for _ in range(max(m - 1, 0))),
            tuple(np.zeros(order) for _ in range(m)),
        )

    @property
    def n(self) -> int:
        return len(self.g) + 1

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(gi.shape[0] for gi in self.g)

    def as_shifted_tri(self) -> UpperTriGenerators:
        return UpperTriGenerators(self.g, self.b, self.h)

    @classmethod
    def from_shifted_tri(cls, tri: UpperTriGenerators):
        return cls(tri.g, tri.b, tri.h)

    def entry(self, i: int, j: int) -> float:
        """Entry (i, j), i < j."""
        return self.as_shifted_tri().entry(i, j - 1)

    def dense(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n))
        if n > 1:
            out[:-1, 1:] = self.as_shifted_tri().dense()
        return out

    def window(self, lo: int, hi: int) -> "UpperQsGenerators":
        if not 0 <= lo < hi <= self.n:
            raise StructureError(f"Window [{lo}, {hi}) outside size {self.n}")
        return UpperQsGenerators(
            self.g[lo : hi - 1], self.b[lo : max(hi - 2, lo)], self.h[lo : hi - 1]
        )

    def add_rank_one(
        self, x: np.ndarray, y: np.ndarray, sign: float = 1.0
    ) -> "UpperQsGenerators":
        """Generators of the strictly upper part of X + sign * x y^T."""
        return UpperQsGenerators(
            tuple(np.append(gi, sign * xi) for gi, xi in zip(self.g, x)),
            tuple(block_diag_one(bk) for bk in self.b),
            tuple(np.append(hj, yj) for hj, yj in zip(self.h, y[1:])),
        )

    def flipped(self) -> "UpperQsGenerators":
        """Generators of the strictly upper part of P X^T P."""
        return UpperQsGenerators.from_shifted_tri(
            self.as_shifted_tri().flipped()
        )

    def with_diagonal(self, d: np.ndarray) -> UpperTriGenerators:
        """Upper triangular generators of this part plus diag(d).

        Orders grow by one: the extra state slot carries the diagonal.
        """
        n = self.n
        g = [np.append(d[i], self.g[i]) for i in range(n - 1)]
        g.append(np.array([d[n - 1]]))
        b = []
        for i in range(n - 1):
            r_next = self.g[i + 1].shape[0] if i + 1 < n - 1 else 0
            bi = np.zeros((1 + self.g[i].shape[0], 1 + r_next))
            bi[1:, 0] = self.h[i]
            if r_next:
                bi[1:, 1:] = self.b[i]
            b.append(bi)
        h = []
        for i in range(n):
            hi = np.zeros(1 + (self.g[i].shape[0] if i < n - 1 else 0))
            hi[0] = 1.0
            h.append(hi)
        return UpperTriGenerators(tuple(g), tuple(b), tuple(h))


@dataclass(frozen=True)
class GeneratorPencil:
    """Condensed representation of a pencil (A, B) of the class P_N.

    A = V - z w^T is upper Hessenberg with subdiagonal ``sigma_a`` and
    B = U - p q^T is upper triangular with diagonal ``d_b``; V and U are
    orthogonal (diagonal blocks of orthogonal matrices after a split).

    >>> from fastqz import Polynomial, companion_pencil
    >>> pencil = companion_pencil(Polynomial([-1.0, 0.0, 1.0]))
    >>> A, B = reconstruct_pair(pencil)
    """

    sigma_a: np.ndarray
    v_gen: UpperTriGenerators
    d_b: np.ndarray
    u_gen: UpperQsGenerators
    z: np.ndarray
    w: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        n = len(self.d_b)
        if n < 1:
            raise StructureError("Empty pencil")
        for name in ("z", "w", "p", "q"):
            if len(getattr(self, name)) != n:
                raise StructureError(f"Vector {name} must have length {n}")
        if len(self.sigma_a) != n - 1:
            raise StructureError(f"sigma_a must have length {n - 1}")
        if self.v_gen.n != n or self.u_gen.n != n:
            raise StructureError(
                f"Generator sizes {self.v_gen.n}, {self.u_gen.n} "
                f"do not match pencil size {n}"
            )

    def __str__(self):
        return (
            f"GeneratorPencil(n={self.n}, orders V={max(self.v_gen.orders)}, "
            f"U={max(self.u_gen.orders, default=0)})"
        )

    @property
    def n(self) -> int:
        return len(self.d_b)

    @property
    def sigma_v(self) -> np.ndarray:
        """Subdiagonal of V."""
        return self.sigma_a + self.z[1:] * self.w[:-1]

    @property
    def d_u(self) -> np.ndarray:
        """Diagonal of U."""
        return self.d_b + self.p * self.q

    def a_tri(self) -> UpperTriGenerators:
        """Upper triangular generators of A (order r_V + 1)."""
        return self.v_gen.add_rank_one(self.z, self.w, -1.0)

    def b_tri(self) -> UpperTriGenerators:
        """Upper triangular generators of B (order r_U + 2)."""
        return self.u_gen.add_rank_one(self.p, self.q, -1.0).with_diagonal(
            self.d_b
        )

    def entry_a(self, i: int, j: int) -> float:
        if i > j + 1:
            return 0.0
        if i == j + 1:
            return float(self.sigma_a[j])
        return self.v_gen.entry(i, j) - self.z[i] * self.w[j]

    def entry_b(self, i: int, j: int) -> float:
        if i > j:
            return 0.0
        if i == j:
            return float(self.d_b[i])
        return self.u_gen.entry(i, j) - self.p[i] * self.q[j]

    def diagonal_a(self) -> np.ndarray:
        return self.v_gen.diagonal() - self.z * self.w

    def norm_b(self) -> float:
        """Frobenius norm of B from the generators."""
        return self.b_tri().frobenius_norm()

    def scale_a(self) -> float:
        """Bound on ||A||_F from the representation: ||V||_F + ||z|| ||w||.

        Entries of A are formed by cancelling against z w^T, so their
        rounding error is proportional to this and not to ||A||.
        """
        return float(
            np.sqrt(self.n) + np.linalg.norm(self.z) * np.linalg.norm(self.w)
        )

    def scale_b(self) -> float:
        """Counterpart of :meth:`scale_a` for B = U - p q^T."""
        return float(
            np.sqrt(self.n) + np.linalg.norm(self.p) * np.linalg.norm(self.q)
        )

    def window(self, lo: int, hi: int) -> "GeneratorPencil":
        """The diagonal block with indices lo..hi-1 as a pencil."""
        return GeneratorPencil(
            self.sigma_a[lo : hi - 1].copy(),
            self.v_gen.window(lo, hi),
            self.d_b[lo:hi].copy(),
            self.u_gen.window(lo, hi),
            self.z[lo:hi].copy(),
            self.w[lo:hi].copy(),
            self.p[lo:hi].copy(),
            self.q[lo:hi].copy(),
        )

    def flipped(self) -> "GeneratorPencil":
        """The pencil (P A^T P, P B^T P), P the reversal permutation.

        It has the same eigenvalues; the leading and trailing ends swap.
        """
        return GeneratorPencil(
            self.sigma_a[::-1].copy(),
            self.v_gen.flipped(),
            self.d_b[::-1].copy(),
            self.u_gen.flipped(),
            self.w[::-1].copy(),
            self.z[::-1].copy(),
            self.q[::-1].copy(),
            self.p[::-1].copy(),
        )


def reconstruct_V(
    gen: UpperTriGenerators,
    sigma_v: np.ndarray,
    z: np.ndarray,
    w: np.ndarray,
) -> np.ndarray:
    """Dense V: generators on and above the diagonal, sigma_v on the
    subdiagonal and z(i) w(j) below it."""
    n = gen.n
    if len(sigma_v) != n - 1 or len(z) != n or len(w) != n:
        raise StructureError("Vector lengths do not match generator size")
    out = gen.dense()
    out += np.tril(np.outer(z, w), -2)
    idx = np.arange(n - 1)
    out[idx + 1, idx] = sigma_v
    return out


def reconstruct_U(
    gen: UpperQsGenerators,
    d_u: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
) -> np.ndarray:
    """Dense U: generators above the diagonal, d_u on it and p(i) q(j)
    below it."""
    n = gen.n
    if len(d_u) != n or len(p) != n or len(q) != n:
        raise StructureError("Vector lengths do not match generator size")
    return gen.dense() + np.diag(d_u) + np.tril(np.outer(p, q), -1)


def reconstruct_pair(pencil: GeneratorPencil) -> Tuple[np.ndarray, np.ndarray]:
    """Dense (A, B) with the Hessenberg and triangular patterns exact."""
    n = pencil.n
    V = reconstruct_V(pencil.v_gen, pencil.sigma_v, pencil.z, pencil.w)
    U = reconstruct_U(pencil.u_gen, pencil.d_u, pencil.p, pencil.q)
    A = np.triu(V - np.outer(pencil.z, pencil.w))
    idx = np.arange(n - 1)
    A[idx + 1, idx] = pencil.sigma_a
    B = np.triu(U - np.outer(pencil.p, pencil.q), 1)
    B[np.arange(n), np.arange(n)] = pencil.d_b
    return A, B

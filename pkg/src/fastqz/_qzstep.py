"""

One implicit structured QZ sweep on a :class:`GeneratorPencil`.

The sweep applies Q^T (A, B) Z with Q = Q_0 Q_1 ... and Z = Z_0 Z_1 ...,
each factor acting on three consecutive indices, and never forms A or B.
It streams the orthogonal factors V and U through small windows: at
step c the rows c..c+3 and columns c..c+2 touched next are held densely,
and everything further right is a tail block of coefficients against
the original generators. The values of A and B needed to choose the
rotations are formed locally as V - z w^T and U - p q^T.

Every step emits one row generator, one column generator and one
transition for V_1 and for U_1, so the result costs O(N) and the orders
grow by at most three before recompression.

"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from fastqz._errors import NumericalFailure, StructureError
from fastqz._generators import (
    UNIT_ROUNDOFF,
    GeneratorPencil,
    UpperTriGenerators,
)
from fastqz._logger import get_solver_logger
from fastqz._rotations import (
    apply_cols,
    apply_rows,
    rotation_zero_left,
    rotation_zero_top,
    zero_col3,
    zero_row_pattern,
    zero_tail3,
)

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)


@dataclass(frozen=True)
class ShiftPoly:
    """Shift polynomial p(x) = alpha + beta x + gamma x^2."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        coeffs = (self.alpha, self.beta, self.gamma)
        if not all(np.isfinite(coeffs)):
            raise StructureError(f"Non-finite shift polynomial {coeffs}")
        if self.alpha == 0.0 and self.beta == 0.0 and self.gamma == 0.0:
            raise StructureError("Shift polynomial is identically zero")

    @property
    def degree(self) -> int:
        if self.gamma != 0.0:
            return 2
        return 1 if self.beta != 0.0 else 0

    @classmethod
    def single(cls, shift: float) -> "ShiftPoly":
        """p(x) = x - shift."""
        return cls(-float(shift), 1.0, 0.0)

    @classmethod
    def double(cls, shift: complex) -> "ShiftPoly":
        """p(x) = (x - shift)(x - conj(shift)), real for any shift."""
        shift = complex(shift)
        return cls(abs(shift) ** 2, -2.0 * shift.real, 1.0)

    @classmethod
    def from_real_pair(cls, mu1: float, mu2: float) -> "ShiftPoly":
        """p(x) = (x - mu1)(x - mu2)."""
        return cls(mu1 * mu2, -(mu1 + mu2), 1.0)

    def __call__(self, x):
        return self.alpha + self.beta * x + self.gamma * x * x


@dataclass
class ChaseState:
    """Window state of a sweep between two steps.

    At step c the windows hold rows c..c+3 and columns c..c+2 of the
    current V and U. Row i of a tail holds the coefficients of that row
    against b(c+3) ... b(j-1) h(j), the original generators of the
    columns j >= c+3. The perturbation vectors are carried whole, rotated
    as the sweep goes.
    """

    step: int
    n: int
    v_gen: UpperTriGenerators
    u_gen: UpperTriGenerators
    sigma_a: np.ndarray
    v_window: np.ndarray
    v_tail: np.ndarray
    u_window: np.ndarray
    u_tail: np.ndarray
    z: np.ndarray
    w: np.ndarray
    p: np.ndarray
    q: np.ndarray
    operations: int = 0

    def a_window(self) -> np.ndarray:
        """Current A restricted to the window."""
        rows, cols = self.v_window.shape
        c = self.step
        return self.v_window - np.outer(
            self.z[c : c + rows], self.w[c : c + cols]
        )

    def b_window(self) -> np.ndarray:
        rows, cols = self.u_window.shape
        c = self.step
        return self.u_window - np.outer(
            self.p[c : c + rows], self.q[c : c + cols]
        )

    def rotate_rows(self, R: np.ndarray, first: int) -> None:
        """Apply R^T to window rows first.. and the matching entries of
        z and p."""
        k = R.shape[0]
        apply_rows(R, self.v_window, first)
        apply_rows(R, self.u_window, first)
        apply_rows(R, self.v_tail, first)
        apply_rows(R, self.u_tail, first)
        lo = self.step + first
        self.z[lo : lo + k] = R.T @ self.z[lo : lo + k]
        self.p[lo : lo + k] = R.T @ self.p[lo : lo + k]
        self.operations += 1

    def rotate_cols(self, R: np.ndarray) -> None:
        """Apply R to the window columns and the matching entries of w
        and q."""
        k = R.shape[0]
        apply_cols(R, self.v_window)
        apply_cols(R, self.u_window)
        c = self.step
        self.w[c : c + k] = R.T @ self.w[c : c + k]
        self.q[c : c + k] = R.T @ self.q[c : c + k]
        self.operations += 1


@dataclass(frozen=True)
class StepEmission:
    """Generators of V_1 and U_1 emitted by one chase step."""

    g_v: np.ndarray
    b_v: np.ndarray
    h_v: np.ndarray
    g_u: np.ndarray
    b_u: np.ndarray
    h_u: np.ndarray
    sigma_a: float


@dataclass
class SweepOutput:
    """Result of one sweep, before recompression."""

    pencil: GeneratorPencil
    sigma_a: np.ndarray
    q_list: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    z_list: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    operations: int = 0


def _dense_block(gen, sigma, x, y, rows, cols):
    """Leading rows x cols block of an orthogonal factor whose lower part
    is sigma on the subdiagonal plus x y^T."""
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            if i <= j:
                out[i, j] = gen.entry(i, j)
            else:
                out[i, j] = x[i] * y[j] + (sigma[j] if i == j + 1 else 0.0)
    return out


def _tail_block(gen: UpperTriGenerators, rows: int) -> np.ndarray:
    if gen.n < 4:
        return np.zeros((rows, 0))
    out = np.zeros((rows, gen.orders[3]))
    for row in range(rows):
        s = gen.g[row]
        for k in range(row, 3):
            s = s @ gen.b[k]
        out[row] = s
    return out


def _transition(Z, gen, c, n):
    ne = Z.shape[0]
    t_c = gen.orders[c + 3] if c + 3 <= n - 1 else 0
    t_next = gen.orders[c + 4] if c + 4 <= n - 1 else 0
    ne_next = min(3, n - c - 1)
    out = np.zeros((ne + t_c, ne_next + t_next))
    out[:ne, : ne - 1] = Z[:, 1:]
    if t_c:
        out[ne:, ne - 1] = gen.h[c + 3]
    if t_next:
        out[ne:, ne_next:] = gen.b[c + 3]
    return out


def shift_vector(pencil: GeneratorPencil, shift: ShiftPoly) -> np.ndarray:
    """First entries of p(A B^-1) e_1, from the leading 3x2 block of A and
    the leading 2x2 block of B.

    Returns three entries (two when N = 2).

    Raises:
        NumericalFailure: B(0, 0) or, for a double shift, B(1, 1) is
            negligible; the infinite eigenvalue must be deflated first.
    """
    n = pencil.n
    m = min(3, n)
    norm_b = pencil.norm_b()
    b11 = pencil.entry_b(0, 0)
    if abs(b11) <= UNIT_ROUNDOFF * norm_b:
        raise NumericalFailure(
            "B(0, 0) is negligible, deflate the infinite eigenvalue first"
        )
    a11 = pencil.entry_a(0, 0)
    a21 = pencil.entry_a(1, 0)
    y1, y2 = a11 / b11, a21 / b11
    s = np.zeros(m)
    s[0] = shift.alpha + shift.beta * y1
    s[1] = shift.beta * y2
    if shift.gamma != 0.0:
        if n < 3:
            raise StructureError("Double shift needs at least three rows")
        b22 = pencil.entry_b(1, 1)
        if abs(b22) <= UNIT_ROUNDOFF * norm_b:
            raise NumericalFailure(
                "B(1, 1) is negligible, deflate the infinite eigenvalue first"
            )
        x2 = y2 / b22
        x1 = (y1 - pencil.entry_b(0, 1) * x2) / b11
        s[0] += shift.gamma * (a11 * x1 + pencil.entry_a(0, 1) * x2)
        s[1] += shift.gamma * (a21 * x1 + pencil.entry_a(1, 1) * x2)
        s[2] += shift.gamma * pencil.entry_a(2, 1) * x2
    return s


class QZPolicy:
    """Rotation choices of the implicit shifted QZ sweep."""

    def __init__(self, pencil: GeneratorPencil, shift: ShiftPoly):
        self.shift = shift
        self.s = shift_vector(pencil, shift)

    def first_left(self, state: ChaseState) -> Iterator[np.ndarray]:
        if self.s.shape[0] == 3:
            yield zero_tail3(self.s)
        else:
            yield rotation_zero_top(self.s[0], self.s[1])

    def right(self, state: ChaseState) -> np.ndarray:
        B = state.b_window()
        if B.shape[1] == 3:
            return zero_row_pattern(B[1:3, :])
        return rotation_zero_left(B[1, 0], B[1, 1])

    def left(self, state: ChaseState, bulge: np.ndarray) -> np.ndarray:
        if bulge.shape[0] == 3:
            return zero_col3(bulge)[0]
        return rotation_zero_top(bulge[0], bulge[1])


class InfiniteChasePolicy:
    """Rotation choices pushing a zero diagonal entry of B from index k to
    the last index, then zeroing the last subdiagonal entry of A.

    Row rotation L_i on rows (i, i+1) zeroes B(i+1, i+1) against
    B(i, i+1); column rotation R_i on columns (i-1, i) removes the fill
    A(i+1, i-1) it leaves. L_i sits in Q_{i-1} (L_0 and L_1 both in
    Q_0) and R_i in Z_{i-1}.
    """

    def __init__(self, k: int):
        self.k = k

    @staticmethod
    def _row_rotation(B: np.ndarray, i: int, size: int) -> np.ndarray:
        R = np.eye(size)
        R[i : i + 2, i : i + 2] = rotation_zero_top(B[i, i + 1], B[i + 1, i + 1])
        return R

    def first_left(self, state: ChaseState) -> Iterator[np.ndarray]:
        size = min(3, state.n)
        if self.k == 0:
            yield self._row_rotation(state.b_window(), 0, size)
        if self.k <= 1 and state.n >= 3:
            yield self._row_rotation(state.b_window(), 1, size)

    def right(self, state: ChaseState) -> np.ndarray:
        c = state.step
        ne = state.v_window.shape[1]
        R = np.eye(ne)
        if c < self.k - 1:
            return R
        A = state.a_window()
        # fill at (c+2, c), or the last subdiagonal entry at the end
        row = 2 if c <= state.n - 3 else 1
        R[:2, :2] = rotation_zero_left(A[row, 0], A[row, 1])
        return R

    def left(self, state: ChaseState, bulge: np.ndarray) -> np.ndarray:
        # the state has already moved on: rows and columns start at L_i's i - 1
        i = state.step + 1
        m = bulge.shape[0]
        if i < self.k or i > state.n - 2:
            return np.eye(m)
        return self._row_rotation(state.b_window(), 1, 3)


def preparative_phase(
    pencil: GeneratorPencil, policy
) -> Tuple[List[np.ndarray], ChaseState]:
    """Build the initial windows and apply the leading left rotation.

    ``policy`` is a rotation policy or a :class:`ShiftPoly`. Returns the
    rotations applied (one for a shifted sweep) and the state ready for
    step 0.
    """
    if isinstance(policy, ShiftPoly):
        policy = QZPolicy(pencil, policy)
    n = pencil.n
    if n < 2:
        raise StructureError("A sweep needs at least two rows")
    rows, cols = min(4, n), min(3, n)
    v_gen = pencil.v_gen
    u_gen = pencil.u_gen.with_diagonal(pencil.d_u)
    z, w = pencil.z.copy(), pencil.w.copy()
    p, q = pencil.p.copy(), pencil.q.copy()
    state = ChaseState(
        step=0,
        n=n,
        v_gen=v_gen,
        u_gen=u_gen,
        sigma_a=pencil.sigma_a,
        v_window=_dense_block(v_gen, pencil.sigma_a, z, w, rows, cols),
        v_tail=_tail_block(v_gen, rows),
        u_window=_dense_block(u_gen, np.zeros(n - 1), p, q, rows, cols),
        u_tail=_tail_block(u_gen, rows),
        z=z,
        w=w,
        p=p,
        q=q,
    )
    applied = []
    for R in policy.first_left(state):
        state.rotate_rows(R, 0)
        applied.append(R)
    return applied, state


def chase_step(
    state: ChaseState, policy
) -> Tuple[np.ndarray, Optional[np.ndarray], StepEmission]:
    """Step c = state.step: emit row c, apply Z_c, emit column c and the
    transition to c + 1, then apply Q_{c+1} to the bulge.

    Returns (Z_c, Q_{c+1} or None at the last step, emission). The state
    is advanced in place.

    Raises:
        NumericalFailure: a window entry became non-finite.
    """
    n = state.n
    c = state.step
    g_v = np.concatenate([state.v_window[0], state.v_tail[0]])
    g_u = np.concatenate([state.u_window[0], state.u_tail[0]])

    Z = policy.right(state)
    state.rotate_cols(Z)

    h_v = np.concatenate([Z[:, 0], np.zeros(state.v_tail.shape[1])])
    h_u = np.concatenate([Z[:, 0], np.zeros(state.u_tail.shape[1])])
    b_v = _transition(Z, state.v_gen, c, n)
    b_u = _transition(Z, state.u_gen, c, n)

    m = state.v_window.shape[0] - 1
    bulge = state.v_window[1:, 0] - state.z[c + 1 : c + 1 + m] * state.w[c]

    state.v_window, state.v_tail = _advance(
        state.v_window, state.v_tail, state.v_gen, c, n
    )
    state.u_window, state.u_tail = _advance(
        state.u_window, state.u_tail, state.u_gen, c, n
    )
    state.step = c + 1

    Q = None
    if c <= n - 3:
        Q = policy.left(state, bulge)
        state.rotate_rows(Q, 0)
        sigma = float((Q.T @ bulge)[0])
    else:
        sigma = float(bulge[0])

    if c + 4 <= n - 1:
        k = c + 4
        row_v = state.z[k] * state.w[c + 1 : c + 4]
        row_v[2] += state.sigma_a[c + 3]
        state.v_window = np.vstack([state.v_window, row_v])
        state.v_tail = np.vstack([state.v_tail, state.v_gen.g[k]])
        row_u = state.p[k] * state.q[c + 1 : c + 4]
        state.u_window = np.vstack([state.u_window, row_u])
        state.u_tail = np.vstack([state.u_tail, state.u_gen.g[k]])

    if not (
        np.all(np.isfinite(state.v_window)) and np.all(np.isfinite(state.u_window))
    ):
        raise NumericalFailure("Non-finite window entry", step=c)
    return Z, Q, StepEmission(g_v, b_v, h_v, g_u, b_u, h_u, sigma)


def _advance(window, tail, gen, c, n):
    """Drop the emitted row and column, bring in column c + 3."""
    window = window[1:, 1:]
    tail = tail[1:]
    if c + 3 <= n - 1:
        window = np.hstack([window, (tail @ gen.h[c + 3])[:, None]])
        if c + 4 <= n - 1:
            tail = tail @ gen.b[c + 3]
        else:
            tail = np.zeros((tail.shape[0], 0))
    return window.copy(), tail


def recover_generators(
    emissions: List[StepEmission],
    last_v: np.ndarray,
    last_u: np.ndarray,
    z: np.ndarray,
    w: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
) -> GeneratorPencil:
    """Assemble the emitted stream into the new pencil (A_1, B_1).

    Orders are not minimal; see :func:`fastqz.compress_pencil`.

    Raises:
        StructureError: the stream does not cover N - 1 steps.
    """
    n = len(z)
    if len(emissions) != n - 1:
        raise StructureError(
            f"Sweep stream has {len(emissions)} steps, expected {n - 1}"
        )
    one = np.ones(1)
    v1 = UpperTriGenerators(
        tuple(e.g_v for e in emissions) + (last_v,),
        tuple(e.b_v for e in emissions),
        tuple(e.h_v for e in emissions) + (one,),
    )
    u1 = UpperTriGenerators(
        tuple(e.g_u for e in emissions) + (last_u,),
        tuple(e.b_u for e in emissions),
        tuple(e.h_u for e in emissions) + (one,),
    )
    d_b = u1.diagonal() - p * q
    return GeneratorPencil(
        np.array([e.sigma_a for e in emissions]),
        v1,
        d_b,
        u1.strict_upper(),
        z,
        w,
        p,
        q,
    )


def run_chase(
    pencil: GeneratorPencil, policy, keep_log: bool = False
) -> SweepOutput:
    """Drive a full chase with the given rotation policy."""
    n = pencil.n
    first, state = preparative_phase(pencil, policy)
    q_list: List[Tuple[int, np.ndarray]] = []
    z_list: List[Tuple[int, np.ndarray]] = []
    if keep_log:
        q0 = np.eye(min(3, n))
        for R in first:
            q0 = q0 @ R
        q_list.append((0, q0))
    emissions = []
    for c in range(n - 1):
        Z, Q, emission = chase_step(state, policy)
        emissions.append(emission)
        if keep_log:
            z_list.append((c, Z))
            if Q is not None:
                q_list.append((c + 1, Q))
    last_v = state.v_window[0, 0:1].copy()
    last_u = state.u_window[0, 0:1].copy()
    result = recover_generators(
        emissions, last_v, last_u, state.z, state.w, state.p, state.q
    )
    return SweepOutput(
        result, result.sigma_a, q_list, z_list, state.operations
    )


def sweep(
    pencil: GeneratorPencil, shift: ShiftPoly, keep_log: bool = False
) -> SweepOutput:
    """One implicit QZ sweep with the given shift polynomial.

    With ``keep_log`` the rotations are kept as (offset, matrix) pairs
    for the dense mirror; otherwise only O(N) memory is used.
    """
    if shift.degree == 2 and pencil.n < 3:
        raise StructureError("Double shift sweep needs N >= 3")
    out = run_chase(pencil, QZPolicy(pencil, shift), keep_log)
    logger.debug(
        "Sweep on N=%d with shift (%g, %g, %g): last subdiagonal %.3e",
        pencil.n,
        shift.alpha,
        shift.beta,
        shift.gamma,
        abs(out.sigma_a[-1]),
    )
    return out


def chase_infinite(
    pencil: GeneratorPencil, k: int, keep_log: bool = False
) -> SweepOutput:
    """Move the zero at B(k, k) to the bottom and split it off.

    On return B(N-1, N-1) and A(N-1, N-2) are set to exact zeros.
    """
    n = pencil.n
    if not 0 <= k < n:
        raise StructureError(f"Index {k} outside pencil of size {n}")
    out = run_chase(pencil, InfiniteChasePolicy(k), keep_log)
    result = out.pencil
    sigma_a = result.sigma_a.copy()
    d_b = result.d_b.copy()
    logger.debug(
        "Infinite chase from %d: residual B %.3e, A %.3e",
        k,
        abs(d_b[-1]),
        abs(sigma_a[-1]),
    )
    sigma_a[-1] = 0.0
    d_b[-1] = 0.0
    result = GeneratorPencil(
        sigma_a,
        result.v_gen,
        d_b,
        result.u_gen,
        result.z,
        result.w,
        result.p,
        result.q,
    )
    return SweepOutput(
        result, sigma_a, out.q_list, out.z_list, out.operations
    )

"""

Eigensolver for companion-like pencils.

The active part of the pencil is kept as a stack of independent diagonal
blocks. A block is split when a subdiagonal entry of A becomes
negligible, loses its top row when B has a negligible diagonal entry,
and is resolved directly once it is 2 x 2 or smaller. Everything else
gets one structured sweep followed by recompression.

"""

import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import yaml

from fastqz._compression import DEFAULT_TAU, compress_pencil
from fastqz._errors import CompressionError, NumericalFailure, StructureError
from fastqz._generators import MACHINE_EPSILON, UNIT_ROUNDOFF, GeneratorPencil
from fastqz._logger import get_solver_logger
from fastqz._oracle import mirror_discrepancy
from fastqz._qzstep import ShiftPoly, chase_infinite, sweep

# pylint: disable=C0103 # allow non-snake case variable names

logger = get_solver_logger(__name__)

ORACLE_TOLERANCE = 1e3 * UNIT_ROUNDOFF


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    Args:
        max_sweeps_per_eig: total sweep budget is this times N.
        exceptional_after: sweeps on one block without a split before an
            exceptional shift is used.
        deflation_factor: multiplies machine epsilon in the subdiagonal test.
        deflation_floor: multiplies the rounding level of the computed
            subdiagonal, see :func:`deflation_floor`. Zero disables it.
        infinite_factor: multiplies u ||B||_F in the infinite test.
        compression_tau: relative cutoff used by recompression.
        oracle_mode: replay every sweep densely and record the mismatch.
        deflation_mode: "scan" zeroes every negligible subdiagonal entry
            of a block, "single" only the lowest one.
        shift_mode: "double" always uses both trailing eigenvalues, "auto"
            a linear shift when they are real.
    """

    max_sweeps_per_eig: int = 30
    exceptional_after: int = 15
    deflation_factor: float = 1.0
    deflation_floor: float = 10.0
    infinite_factor: float = 1.0
    compression_tau: float = DEFAULT_TAU
    oracle_mode: bool = False
    deflation_mode: str = "scan"
    shift_mode: str = "double"

    def __post_init__(self):
        if self.deflation_mode not in ("scan", "single"):
            raise ValueError(f"Unknown deflation mode {self.deflation_mode!r}")
        if self.shift_mode not in ("auto", "double"):
            raise ValueError(f"Unknown shift mode {self.shift_mode!r}")
        if self.exceptional_after >= self.max_sweeps_per_eig:
            raise ValueError(
                "exceptional_after must be smaller than max_sweeps_per_eig"
            )
        if self.max_sweeps_per_eig < 1 or self.exceptional_after < 1:
            raise ValueError("Sweep counts must be positive")
        if self.deflation_floor < 0:
            raise ValueError("deflation_floor must not be negative")

    @classmethod
    def from_mapping(cls, values: Mapping) -> "SolverConfig":
        """Build from a mapping, warning about keys that are not settings."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            warnings.warn(f"Ignoring unknown solver settings: {unknown}")
        return cls(**{k: v for k, v in values.items() if k in known})

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "SolverConfig":
        with open(path, "r") as stream:
            values = yaml.safe_load(stream) or {}
        if not isinstance(values, dict):
            raise ValueError(f"Solver settings in {path} are not a mapping")
        return cls.from_mapping(values)

    def as_dict(self) -> dict:
        return asdict(self)


class DeflationEvent(NamedTuple):
    kind: str  # "finite", "infinite", "small" or "stalled"
    index: int
    sweep: int


@dataclass
class EigenResult:
    """Eigenvalues as homogeneous pairs (alpha, beta).

    beta == 0 encodes an infinite eigenvalue, alpha == beta == nan an
    indeterminate or unconverged one. Complex eigenvalues come in
    adjacent conjugate pairs.
    """

    alpha: np.ndarray
    beta: np.ndarray
    iterations_total: int
    deflation_log: List[DeflationEvent] = field(default_factory=list)
    converged: bool = True
    oracle_residual: float = 0.0

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def iterations_per_eig(self) -> float:
        return self.iterations_total / max(self.n, 1)

    @property
    def eigenvalues(self) -> np.ndarray:
        """alpha / beta, with inf for infinite and nan for undetermined."""
        out = np.full(self.n, np.nan, dtype=complex)
        finite = self.beta != 0
        out[finite] = self.alpha[finite] / self.beta[finite]
        out[(self.beta == 0) & ~np.isnan(self.alpha)] = np.inf
        return out

    def finite_eigenvalues(self) -> np.ndarray:
        lam = self.eigenvalues
        return lam[np.isfinite(lam)]

    @property
    def n_infinite(self) -> int:
        return int(np.count_nonzero((self.beta == 0) & ~np.isnan(self.alpha)))

    @property
    def n_indeterminate(self) -> int:
        return int(np.count_nonzero(np.isnan(self.alpha)))


def _trailing_pair(pencil: GeneratorPencil) -> Tuple[np.ndarray, np.ndarray]:
    m = pencil.n
    i, j = m - 2, m - 1
    A2 = np.array(
        [
            [pencil.entry_a(i, i), pencil.entry_a(i, j)],
            [pencil.sigma_a[i], pencil.entry_a(j, j)],
        ]
    )
    B2 = np.array(
        [[pencil.entry_b(i, i), pencil.entry_b(i, j)], [0.0, pencil.d_b[j]]]
    )
    return A2, B2


def deflation_floor(pencil: GeneratorPencil) -> float:
    """Rounding level of the subdiagonal of A as a sweep computes it.

    Each A(k+1, k) comes out of a difference of V entries and z w^T
    products, so once converged it stalls near eps sqrt(N) (1 + ||z|| ||w||)
    instead of shrinking further.
    """
    return float(
        MACHINE_EPSILON
        * np.sqrt(pencil.n)
        * (1.0 + np.linalg.norm(pencil.z) * np.linalg.norm(pencil.w))
    )


def detect_deflation(
    pencil: GeneratorPencil, factor: float = 1.0, floor: float = 10.0
) -> List[int]:
    """Indices k, largest first, where A(k+1, k) is negligible.

    The test is |A(k+1, k)| <= factor eps (|A(k, k)| + |A(k+1, k+1)|),
    with the right side raised to ``floor`` times
    :func:`deflation_floor`. Callers set those entries to zero and split.
    """
    if pencil.n < 2:
        return []
    diag = np.abs(pencil.diagonal_a())
    tol = factor * MACHINE_EPSILON * (diag[:-1] + diag[1:])
    if floor > 0:
        tol = np.maximum(tol, floor * deflation_floor(pencil))
    hits = np.nonzero(np.abs(pencil.sigma_a) <= tol)[0]
    return [int(k) for k in hits[::-1]]


def split_at(
    pencil: GeneratorPencil, indices: List[int]
) -> List[Tuple[int, GeneratorPencil]]:
    """Diagonal blocks between the given split points, as (offset, block)."""
    bounds = [0] + sorted(k + 1 for k in indices) + [pencil.n]
    return [
        (lo, pencil.window(lo, hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]


def find_infinite(
    pencil: GeneratorPencil, norm_b: float, factor: float = 1.0
) -> Optional[int]:
    """First index with |B(k, k)| <= factor u ||B||_F, or None."""
    hits = np.nonzero(
        np.abs(pencil.d_b) <= factor * UNIT_ROUNDOFF * norm_b
    )[0]
    return int(hits[0]) if hits.size else None


def deflate_infinite(
    pencil: GeneratorPencil,
    k: int,
    norm_b: Optional[float] = None,
    factor: float = 1.0,
    keep_log: bool = False,
):
    """Move the negligible B(k, k) to the top of the block.

    The chase runs on the flipped pencil, where the zero travels to the
    bottom, and the result is flipped back. On return B(0, 0) = 0 and
    A(1, 0) = 0 exactly, so the leading 1 x 1 block carries the infinite
    eigenvalue.

    Returns the new pencil and the chase output (logs of the flipped run).

    Raises:
        StructureError: B(k, k) is not negligible.
    """
    norm_b = pencil.norm_b() if norm_b is None else norm_b
    if abs(pencil.d_b[k]) > factor * UNIT_ROUNDOFF * norm_b:
        raise StructureError(
            f"B({k}, {k}) = {pencil.d_b[k]:.3e} is not negligible"
        )
    n = pencil.n
    out = chase_infinite(pencil.flipped(), n - 1 - k, keep_log)
    return out.pencil.flipped(), out


def select_shift(pencil: GeneratorPencil, mode: str = "auto") -> ShiftPoly:
    """Shift from the eigenvalues of the trailing 2 x 2 pair.

    A complex pair gives the real quadratic with both as roots. Real
    eigenvalues give a linear shift at the one closest to A(N, N)/B(N, N)
    in "auto" mode and the quadratic with both as roots in "double" mode.

    Raises:
        StructureError: the block is smaller than 2 x 2.
    """
    if pencil.n < 2:
        raise StructureError("Shift selection needs a 2 x 2 trailing block")
    A2, B2 = _trailing_pair(pencil)
    lam = scipy.linalg.eigvals(A2, B2)
    if np.all(np.abs(lam.imag) > 0) and np.all(np.isfinite(lam)):
        return ShiftPoly.double(lam[0])
    target = A2[1, 1] / B2[1, 1]
    finite = lam[np.isfinite(lam)].real
    if finite.size == 0:
        return ShiftPoly.single(target)
    if mode == "double" and finite.size == 2:
        return ShiftPoly.from_real_pair(finite[0], finite[1])
    return ShiftPoly.single(finite[np.argmin(np.abs(finite - target))])


def exceptional_shift(pencil: GeneratorPencil, occurrence: int) -> ShiftPoly:
    """Deterministic perturbed shift for a stagnating block.

    Odd occurrences: linear shift at 1.5 A(N, N)/B(N, N). Even
    occurrences: the trailing characteristic quadratic with its trace
    scaled by 1.1.

    With t = A(N, N)/B(N, N) and s = |A(N, N-1)/B(N-1, N-1)|, a trailing
    diagonal below s / 100 leaves both rules at the stagnating shift. The
    shift then moves to t + 0.75 s: linear on odd occurrences, the
    conjugate pair t + 0.75 s +- 0.6614 i s on even ones.
    """
    A2, B2 = _trailing_pair(pencil)
    t = A2[1, 1] / B2[1, 1]
    s = abs(A2[1, 0] / B2[0, 0])
    M = A2 @ np.linalg.inv(B2)
    if occurrence % 2 == 1:
        if abs(t) < 0.01 * s:
            return ShiftPoly.single(t + 0.75 * s)
        return ShiftPoly.single(1.5 * t)
    trace = float(np.trace(M))
    if abs(trace) < 0.01 * s:
        return ShiftPoly.double(complex(t + 0.75 * s, 0.6614 * s))
    return ShiftPoly(float(np.linalg.det(M)), -1.1 * trace, 1.0)


def extract_small(
    pencil: GeneratorPencil, norm_b: Optional[float] = None
) -> List[Tuple[complex, float]]:
    """Eigenvalue pairs of a 1 x 1 or 2 x 2 block.

    Finite eigenvalues are returned with beta = 1, infinite ones with
    beta = 0 and indeterminate ones as (nan, nan) after a warning.
    """
    m = pencil.n
    if m > 2:
        raise StructureError(f"Block of size {m} is not small")
    norm_b = pencil.norm_b() if norm_b is None else norm_b
    if m == 1:
        a, b = pencil.entry_a(0, 0), pencil.d_b[0]
        if abs(b) <= UNIT_ROUNDOFF * norm_b:
            if abs(a) <= UNIT_ROUNDOFF * norm_b:
                warnings.warn("Indeterminate 1 x 1 block (0, 0)")
                return [(complex(np.nan), np.nan)]
            return [(complex(a), 0.0)]
        return [(complex(a / b), 1.0)]

    A2, B2 = _trailing_pair(pencil)
    alpha, beta = scipy.linalg.eigvals(A2, B2, homogeneous_eigvals=True)
    norm_a = float(np.linalg.norm(A2))
    pairs = []
    for al, be in zip(alpha, beta):
        if abs(al) <= UNIT_ROUNDOFF * norm_a and abs(be) <= UNIT_ROUNDOFF * norm_b:
            warnings.warn("Indeterminate 2 x 2 block: A and B both singular")
            pairs.append((complex(np.nan), np.nan))
        elif abs(be) <= UNIT_ROUNDOFF * norm_b:
            pairs.append((complex(al), 0.0))
        else:
            pairs.append((complex(al / be), 1.0))
    lam = [a for a, b in pairs if b == 1.0]
    if len(lam) == 2 and lam[0].imag != 0.0:
        # keep the pair exactly conjugate
        pairs = [(lam[0], 1.0), (lam[0].conjugate(), 1.0)]
    return pairs


def _recompress(
    pencil: GeneratorPencil, config: SolverConfig, sweeps: int
) -> GeneratorPencil:
    try:
        return compress_pencil(pencil, config.compression_tau)
    except CompressionError as err:
        raise NumericalFailure(
            f"Compression failed: {err}", sweep=sweeps, step=err.index
        ) from err


class _Block(NamedTuple):
    offset: int
    pencil: GeneratorPencil
    stagnant: int = 0
    exceptional: int = 0


def solve(
    pencil: GeneratorPencil, config: Optional[SolverConfig] = None
) -> EigenResult:
    """All N eigenvalues of (A, B).

    On running out of sweeps the eigenvalues found so far are returned,
    the rest as nan, ``converged`` is False and a warning is issued.

    Raises:
        NumericalFailure: a sweep produced a non-finite value, or the
            generators lost their rank structure beyond the drift bound
            of recompression. The sweep number is attached.
    """
    config = config or SolverConfig()
    n = pencil.n
    norm_b = pencil.norm_b()
    budget = config.max_sweeps_per_eig * n
    alpha = np.full(n, np.nan, dtype=complex)
    beta = np.full(n, np.nan)
    log: List[DeflationEvent] = []
    sweeps = 0
    oracle_residual = 0.0
    stack = [_Block(0, pencil)]

    while stack:
        block = stack.pop()
        off, pen = block.offset, block.pencil
        m = pen.n

        if m <= 2:
            for i, (a, b) in enumerate(extract_small(pen, norm_b)):
                alpha[off + i], beta[off + i] = a, b
            log.append(DeflationEvent("small", off, sweeps))
            continue

        k = find_infinite(pen, norm_b, config.infinite_factor)
        if k is not None:
            pen, out = deflate_infinite(
                pen, k, norm_b, config.infinite_factor, config.oracle_mode
            )
            if config.oracle_mode:
                oracle_residual = max(
                    oracle_residual,
                    mirror_discrepancy(
                        block.pencil.flipped(),
                        pen.flipped(),
                        (out.q_list, out.z_list),
                    ),
                )
            pen = _recompress(pen, config, sweeps)
            alpha[off], beta[off] = complex(pen.entry_a(0, 0)), 0.0
            log.append(DeflationEvent("infinite", off, sweeps))
            logger.debug("Infinite eigenvalue deflated at %d", off + k)
            stack.append(_Block(off + 1, pen.window(1, m)))
            continue

        splits = detect_deflation(
            pen, config.deflation_factor, config.deflation_floor
        )
        if config.deflation_mode == "single":
            splits = splits[:1]
        if splits:
            sigma_a = pen.sigma_a.copy()
            sigma_a[splits] = 0.0
            pen = GeneratorPencil(
                sigma_a, pen.v_gen, pen.d_b, pen.u_gen, pen.z, pen.w, pen.p, pen.q
            )
            for k in splits:
                log.append(DeflationEvent("finite", off + k, sweeps))
            for lo, sub in split_at(pen, splits):
                stack.append(_Block(off + lo, sub))
            continue

        if sweeps >= budget:
            message = (
                f"No convergence after {sweeps} sweeps; block at {off} "
                f"of size {m} left unresolved"
            )
            logger.error(message)
            warnings.warn(message)
            log.append(DeflationEvent("stalled", off, sweeps))
            result = EigenResult(alpha, beta, sweeps, log, False, oracle_residual)
            return result

        stagnant = block.stagnant + 1
        exceptional = block.exceptional
        if stagnant % config.exceptional_after == 0:
            exceptional += 1
            shift = exceptional_shift(pen, exceptional)
            logger.warning(
                "Exceptional shift %d on block at %d (size %d)",
                exceptional,
                off,
                m,
            )
        else:
            shift = select_shift(pen, config.shift_mode)

        try:
            out = sweep(pen, shift, config.oracle_mode)
        except NumericalFailure as err:
            raise NumericalFailure(
                err.reason, sweep=sweeps, step=err.step
            ) from err
        sweeps += 1
        if config.oracle_mode:
            oracle_residual = max(
                oracle_residual,
                mirror_discrepancy(pen, out.pencil, (out.q_list, out.z_list)),
            )
        pen = _recompress(out.pencil, config, sweeps)
        stack.append(_Block(off, pen, stagnant, exceptional))

    logger.info(
        "Solved N=%d in %d sweeps (%.2f per eigenvalue), %d infinite",
        n,
        sweeps,
        sweeps / n,
        sum(1 for e in log if e.kind == "infinite"),
    )
    if config.oracle_mode and oracle_residual > ORACLE_TOLERANCE * n:
        warnings.warn(
            f"Dense mirror mismatch {oracle_residual:.3e} above tolerance"
        )
    return EigenResult(alpha, beta, sweeps, log, True, oracle_residual)

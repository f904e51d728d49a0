"""Top-level package for fastqz"""

try:
    from ._version import version

    __version__ = version
except ImportError:
    __version__ = "0.0.0"

from fastqz._errors import CompressionError, NumericalFailure, StructureError
from fastqz._generators import (
    GeneratorPencil,
    UpperQsGenerators,
    UpperTriGenerators,
)
from fastqz._qzstep import ShiftPoly, sweep
from fastqz.pencils import (
    LagrangeSample,
    Polynomial,
    companion_pencil,
    lagrange_pencil,
    sample_function,
)
from fastqz.solver import EigenResult, SolverConfig, solve


def roots(coeffs, normalize: bool = True, config=None):
    """Roots of p_0 + p_1 x + ... + p_N x^N, lowest degree first."""
    pencil = companion_pencil(Polynomial(coeffs), normalize=normalize)
    return solve(pencil, config).eigenvalues

import warnings

import numpy as np
import pytest

from fastqz import Polynomial, StructureError, sample_function, solve
from fastqz._generators import reconstruct_pair
from fastqz._oracle import dense_eigenvalues, forward_error
from fastqz._reduction import CoreChain, reduce_arrowhead, turnover
from fastqz.pencils import (
    hessenberg_triangular_reduce,
    lagrange_pencil,
    real_arrowhead,
    reduction_discrepancy,
    structured_reduce,
)


def _unitary(rng):
    Z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    Q, _ = np.linalg.qr(Z)
    return Q


def _embed(X, at):
    out = np.eye(3, dtype=complex)
    out[at : at + 2, at : at + 2] = X
    return out


def _arrowhead_vectors(sample):
    n = sample.n
    row = -sample.values / sample.xi
    col = (sample.nodes / n) * sample.xi
    return col / np.linalg.norm(col), row / np.linalg.norm(row)


### TESTS ###


def test_turnover_keeps_product():
    rng = np.random.default_rng(3)
    A, B, C = _unitary(rng), _unitary(rng), _unitary(rng)
    L, A2, B2 = turnover(A, B, C)
    before = _embed(A, 0) @ _embed(B, 1) @ _embed(C, 0)
    after = _embed(L, 1) @ _embed(A2, 0) @ _embed(B2, 1)
    np.testing.assert_allclose(after, before, atol=1e-14)
    for X in (L, A2, B2):
        np.testing.assert_allclose(X.conj().T @ X, np.eye(2), atol=1e-14)


def test_reduce_arrowhead_is_real_hessenberg():
    """The reduced orthogonal part is a real orthogonal Hessenberg matrix
    with the nodes as eigenvalues."""
    sample = sample_function(lambda z: z**5 - 0.1, 9)
    col, row = _arrowhead_vectors(sample)
    red = reduce_arrowhead(sample.nodes, col, row)
    assert red.drift < 1e-13
    assert np.all(red.sigma > 0.0)

    M = red.dense()
    np.testing.assert_allclose(M.T @ M, np.eye(9), atol=1e-13)
    assert np.allclose(np.tril(M, -2), 0.0)
    assert forward_error(sample.nodes, np.linalg.eigvals(M)) < 1e-12
    assert np.linalg.norm(red.u) == pytest.approx(1.0)


def test_core_chain_cost_is_quadratic():
    """Inserting node k chases one rotation through the n - 2 - k planes
    below it, so the turnover count is (n - 1)(n - 2) / 2."""
    for n in (16, 32, 64):
        nodes = np.exp(2j * np.pi * np.arange(n) / n)
        chain = CoreChain(n)
        for j in range(n - 1, -1, -1):
            chain.insert(nodes[j], nodes[j] / n, 1.0)
        assert chain.turnovers == (n - 1) * (n - 2) // 2


def test_core_chain_needs_every_node():
    chain = CoreChain(4)
    chain.insert(1.0, 0.5, 1.0)
    with pytest.raises(StructureError, match="holds 1 of 4"):
        chain.real_form()
    with pytest.raises(StructureError):
        reduce_arrowhead(np.ones(3), np.ones(2), np.ones(3))


@pytest.mark.parametrize(
    "degree, n",
    [(5, 6), (7, 8), (19, 20), (30, 31)],
)
def test_structured_matches_dense_reduction(degree, n):
    rng = np.random.default_rng(degree)
    poly = Polynomial(rng.uniform(-1.0, 1.0, degree + 1))
    sample = sample_function(poly, n)
    structured = structured_reduce(sample)
    dense = hessenberg_triangular_reduce(*real_arrowhead(sample))
    assert structured.n == dense.n
    assert max(structured.v_gen.orders) == 1
    assert reduction_discrepancy(structured, dense) < 1e-12

    A1, B1 = reconstruct_pair(structured)
    A2, B2 = reconstruct_pair(dense)
    lam1 = dense_eigenvalues(A1, B1)
    lam2 = dense_eigenvalues(A2, B2)
    finite1 = lam1[np.abs(lam1) < 1e6]
    finite2 = lam2[np.abs(lam2) < 1e6]
    assert forward_error(finite2, finite1) < 1e-9


def test_discrepancy_sees_size_mismatch():
    sample = sample_function(lambda z: z**3 - 0.1, 8)
    full = structured_reduce(sample, threshold=0.0)
    # every swap passes a threshold of one
    deflated = structured_reduce(sample, threshold=1.0)
    assert full.n == 8
    assert deflated.n == 1
    assert reduction_discrepancy(full, deflated) == np.inf


def test_lagrange_pencil_oracle_mode_is_quiet():
    sample = sample_function(lambda z: z**5 - 0.1, 6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pencil = lagrange_pencil(sample, oracle_mode=True)
    result = solve(pencil)
    expected = 0.1**0.2 * np.exp(2j * np.pi * np.arange(5) / 5)
    finite = result.finite_eigenvalues()
    assert forward_error(expected, finite[np.abs(finite) < 10.0]) < 1e-10


def test_structured_reduce_rejects_asymmetric_samples():
    sample = sample_function(lambda z: z**5 - 0.1, 6)
    bad = sample_function(lambda z: z**5 - 0.1j, 6)
    with pytest.raises(StructureError, match="not conjugate"):
        structured_reduce(bad)
    with pytest.raises(StructureError, match="symmetric"):
        structured_reduce(
            sample_function(lambda z: z**5 - 0.1, 6, xi=[1, 2, 1, 1, 1, 1])
        )
    assert structured_reduce(sample).n <= 6

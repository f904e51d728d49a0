import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from fastqz import (
    GeneratorPencil,
    Polynomial,
    ShiftPoly,
    SolverConfig,
    StructureError,
    companion_pencil,
    roots,
    solve,
)
from fastqz._generators import UNIT_ROUNDOFF
from fastqz._oracle import forward_error
from fastqz.solver import (
    deflation_floor,
    detect_deflation,
    exceptional_shift,
    extract_small,
    find_infinite,
    select_shift,
    split_at,
)


def _with_subdiagonal(pencil, sigma_a):
    return GeneratorPencil(
        np.asarray(sigma_a, dtype=float),
        pencil.v_gen,
        pencil.d_b,
        pencil.u_gen,
        pencil.z,
        pencil.w,
        pencil.p,
        pencil.q,
    )


### TESTS ###


def test_config_validation():
    with pytest.raises(ValueError, match="deflation mode"):
        SolverConfig(deflation_mode="sometimes")
    with pytest.raises(ValueError, match="shift mode"):
        SolverConfig(shift_mode="triple")
    with pytest.raises(ValueError, match="exceptional_after"):
        SolverConfig(max_sweeps_per_eig=10, exceptional_after=10)
    assert SolverConfig().as_dict()["shift_mode"] == "double"


def test_config_from_yaml(data_dir, tmp_path):
    config = SolverConfig.from_yaml(data_dir / "solver.yml")
    assert config.max_sweeps_per_eig == 40
    assert config.exceptional_after == 10
    assert config.oracle_mode is True

    listed = tmp_path / "listed.yml"
    listed.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError, match="not a mapping"):
        SolverConfig.from_yaml(listed)

    empty = tmp_path / "empty.yml"
    empty.write_text("")
    assert SolverConfig.from_yaml(empty) == SolverConfig()


def test_config_unknown_keys_warn():
    with pytest.warns(UserWarning, match="max_sweeps"):
        config = SolverConfig.from_mapping({"max_sweeps": 3, "oracle_mode": True})
    assert config.oracle_mode is True


@pytest.mark.parametrize("n", [3, 5, 10, 25])
def test_solve_random_companion(random_companion, seed, n):
    """Finite roots agree with a dense eigensolver on well-behaved input."""
    pencil = random_companion(n, seed=seed)
    result = solve(pencil)
    assert result.converged
    assert result.n == n
    assert result.n_infinite == 0
    coeffs = np.random.default_rng(seed).uniform(-1.0, 1.0, n + 1)
    assert forward_error(np.roots(coeffs[::-1]), result.eigenvalues) < 1e-8


def test_roots_of_quartic():
    """(x - 1)(x - 2)(x + 3)(x - 0.5)"""
    lam = roots([-3.0, 9.5, -7.0, -0.5, 1.0])
    np.testing.assert_allclose(
        np.sort(lam.real), [-3.0, 0.5, 1.0, 2.0], atol=1e-10
    )
    np.testing.assert_allclose(lam.imag, 0.0, atol=1e-12)


def test_conjugate_pairs_are_exact():
    result = solve(companion_pencil(Polynomial([1.0, 0.0, 1.0, 0.0, 1.0])))
    lam = result.eigenvalues
    for z in lam[lam.imag != 0]:
        assert np.conj(z) in lam


def test_single_shift_mode(random_companion):
    pencil = random_companion(20, seed=8)
    double = solve(pencil)
    single = solve(pencil, SolverConfig(shift_mode="auto"))
    assert single.converged
    assert forward_error(double.eigenvalues, single.eigenvalues) < 1e-8


def test_infinite_eigenvalue():
    """A negligible leading coefficient shows up as an infinite
    eigenvalue; the rest are the roots of the truncated polynomial."""
    with pytest.warns(UserWarning, match="negligible"):
        pencil = companion_pencil(
            Polynomial([1.0, 2.0, 3.0, -1.0, 0.5, 1e-20]), normalize=False
        )
    assert find_infinite(pencil, pencil.norm_b()) == 0
    result = solve(pencil)
    assert result.converged
    assert result.n_infinite == 1
    finite = result.finite_eigenvalues()
    assert finite.size == 4
    expected = np.roots([0.5, -1.0, 3.0, 2.0, 1.0])
    assert forward_error(expected, finite) < 1e-10
    assert any(event.kind == "infinite" for event in result.deflation_log)


def test_non_convergence_returns_partial_result(monkeypatch):
    """The cyclic shift stagnates when every shift is zero."""
    monkeypatch.setattr(
        "fastqz.solver.exceptional_shift",
        lambda pencil, occurrence: ShiftPoly.single(0.0),
    )
    pencil = companion_pencil(
        Polynomial([-1.0] + [0.0] * 7 + [1.0]), normalize=False
    )
    config = SolverConfig(max_sweeps_per_eig=3, exceptional_after=2)
    with pytest.warns(UserWarning, match="No convergence"):
        result = solve(pencil, config)
    assert not result.converged
    assert result.iterations_total == 24
    assert result.n_indeterminate == 8
    assert result.deflation_log[-1].kind == "stalled"


def test_detect_and_split(random_companion):
    pencil = random_companion(9, seed=2)
    sigma_a = np.ones(8)
    sigma_a[[2, 5]] = 0.0
    cut = _with_subdiagonal(pencil, sigma_a)
    hits = detect_deflation(cut)
    assert hits == [5, 2]
    blocks = split_at(cut, hits)
    assert [(off, block.n) for off, block in blocks] == [(0, 3), (3, 3), (6, 3)]
    assert detect_deflation(pencil) == []


def test_extract_small_blocks():
    (pair,) = extract_small(
        companion_pencil(Polynomial([2.0, 4.0]), normalize=False)
    )
    assert pair[0] == pytest.approx(-0.5)
    assert pair[1] == 1.0

    with pytest.warns(UserWarning, match="negligible"):
        infinite = companion_pencil(Polynomial([3.0, 1e-20]), normalize=False)
    (pair,) = extract_small(infinite, norm_b=1.0)
    assert pair == (pytest.approx(-3.0), 0.0)

    with pytest.warns(UserWarning, match="Indeterminate"):
        (pair,) = extract_small(
            companion_pencil(Polynomial([0.0, 1e-20]), normalize=False),
            norm_b=1.0,
        )
    assert np.isnan(pair[1])

    pairs = extract_small(companion_pencil(Polynomial([1.0, 0.0, 1.0])))
    assert pairs[0][0] == np.conj(pairs[1][0])
    assert abs(pairs[0][0]) == pytest.approx(1.0)


def test_extract_small_rejects_large_blocks(random_companion):
    with pytest.raises(StructureError):
        extract_small(random_companion(3))


def test_select_shift_modes():
    pencil = companion_pencil(Polynomial.from_roots([1.0, 3.0]), normalize=False)
    single = select_shift(pencil, "auto")
    assert single.degree == 1
    assert single(1.0) == pytest.approx(0.0, abs=1e-12)
    assert select_shift(pencil, "double").degree == 2

    rotation = companion_pencil(Polynomial([1.0, 0.0, 1.0]), normalize=False)
    for mode in ("auto", "double"):
        shift = select_shift(rotation, mode)
        assert shift.degree == 2
        assert abs(shift(1j)) < 1e-14

    with pytest.raises(StructureError):
        select_shift(companion_pencil(Polynomial([1.0, 1.0])))


def test_exceptional_shift_alternates():
    """Odd occurrences are linear, even ones quadratic."""
    rotation = companion_pencil(Polynomial.from_roots([1.0, 3.0]), normalize=False)
    pencil = rotation.flipped()  # A = [[0, -3], [1, 4]], B = I
    odd = exceptional_shift(pencil, 1)
    assert odd.degree == 1
    assert odd(6.0) == pytest.approx(0.0)
    even = exceptional_shift(pencil, 2)
    assert (even.alpha, even.beta, even.gamma) == pytest.approx((3.0, -4.4, 1.0))


def test_exceptional_shift_on_vanishing_diagonal():
    """A zero trailing diagonal moves the shift off the origin by the
    subdiagonal scale."""
    pencil = companion_pencil(Polynomial([1.0, 0.0, 1.0]), normalize=False)
    odd = exceptional_shift(pencil, 1)
    assert odd.degree == 1
    assert odd(0.75) == pytest.approx(0.0)
    even = exceptional_shift(pencil, 2)
    assert even.degree == 2
    assert abs(even(0.75 + 0.6614j)) < 1e-14


def test_oracle_mode(random_companion):
    """Every sweep is replayed densely; the mismatch stays at roundoff."""
    pencil = random_companion(15, seed=6)
    result = solve(pencil, SolverConfig(oracle_mode=True))
    assert result.converged
    assert 0.0 < result.oracle_residual < 1e3 * UNIT_ROUNDOFF * 15
    plain = solve(pencil)
    assert plain.oracle_residual == 0.0
    np.testing.assert_allclose(plain.eigenvalues, result.eigenvalues)


@pytest.mark.parametrize("tau", [-0.1, 0.1, 0.25])
def test_translated_polynomial_moves_roots(tau):
    """Roots of p(x + tau) are those of p moved by -tau, p = x^12 - 1."""
    n = 12
    coeffs = npoly.polypow([tau, 1.0], n)
    coeffs[0] -= 1.0
    unit = np.exp(2j * np.pi * np.arange(n) / n)
    got = solve(companion_pencil(Polynomial(coeffs))).eigenvalues
    assert forward_error(unit - tau, got) < 1e-12


def test_deflation_at_rounding_level(random_companion):
    """A subdiagonal stalled at the rounding level of the sweep splits,
    though it is far above eps times the diagonal."""
    pencil = random_companion(20, seed=4)
    level = deflation_floor(pencil)
    assert level > 2 * UNIT_ROUNDOFF
    sigma_a = np.ones(19)
    sigma_a[7] = 5.0 * level
    noisy = _with_subdiagonal(pencil, sigma_a)
    assert detect_deflation(noisy) == [7]
    assert detect_deflation(noisy, floor=0.0) == []
    with pytest.raises(ValueError, match="deflation_floor"):
        SolverConfig(deflation_floor=-1.0)

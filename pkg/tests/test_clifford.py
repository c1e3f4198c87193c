import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solerlab.clifford import (SUPPORTED_PAIRS, anticommutator, antilinear, build_algebra, linear, max_defect,
                               sigma_dot, sigma_radial, verify_algebra)
from solerlab.errors import ConfigurationError, DomainError
from solerlab.suites import corrupt_gamma2

finite = st.floats(-5, 5, allow_nan=False)


@pytest.mark.parametrize("n,N", SUPPORTED_PAIRS)
def test_all_defects_vanish(n, N):
    rep = verify_algebra(build_algebra(n, N), trials=200, rng=1)
    assert max_defect(rep) < 1e-13


@pytest.mark.parametrize("n,N", [(1, 4), (3, 2), (5, 4), (2, 4)])
def test_unsupported_pairs(n, N):
    with pytest.raises(ConfigurationError):
        build_algebra(n, N)


def test_block_structure_and_shapes():
    alg = build_algebra(3, 4)
    assert alg.half == 2 and len(alg.alpha) == 3
    assert np.allclose(alg.beta, np.diag([1, 1, -1, -1]))
    for a in alg.alpha:
        assert np.allclose(a[:2, :2], 0) and np.allclose(a[2:, 2:], 0)


def test_conjugation_present_exactly_where_expected():
    assert build_algebra(1, 2).has_B and build_algebra(2, 2).has_B and build_algebra(3, 4).has_B
    assert not build_algebra(4, 4).has_B


def test_four_four_obstruction_norm():
    rep = verify_algebra(build_algebra(4, 4), trials=5, rng=0)
    assert abs(rep["anticommutator_alpha4_norm"] - 2.0) < 1e-13
    assert rep["anticommutator_alpha4_formula_defect"] < 1e-14
    assert rep["conjugation_space_dimension"] == 0


def test_semilinear_composition_rules():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    Bm = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    prod = antilinear(A) @ antilinear(Bm)
    assert not prod.conjugate
    assert np.allclose(prod.matrix @ x, A @ np.conj(Bm @ np.conj(x)))
    anti = anticommutator(linear(A), antilinear(Bm))
    assert anti.conjugate
    assert np.allclose(anti.matrix, A @ Bm + Bm @ np.conj(A))


@given(st.lists(finite, min_size=3, max_size=3), st.floats(0.1, 3.0))
def test_symbol_squares_to_energy(xi, m):
    alg = build_algebra(3, 4)
    xi = np.array(xi)
    S = alg.dirac_symbol(xi, m)
    assert np.allclose(S @ S, (xi @ xi + m * m) * np.eye(4), atol=1e-12)


@given(st.lists(finite, min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_sigma_radial_unitary(x):
    alg = build_algebra(4, 4)
    s = sigma_radial(alg, x)
    assert np.allclose(s @ s.conj().T, np.eye(2), atol=1e-12)


def test_sigma_radial_origin():
    with pytest.raises(DomainError):
        sigma_radial(build_algebra(3, 4), [0.0, 0.0, 0.0])


def test_sigma_dot_batches():
    alg = build_algebra(3, 4)
    pts = np.random.default_rng(0).standard_normal((7, 3))
    S = sigma_dot(alg, pts)
    assert S.shape == (7, 2, 2)
    for p, Sp in zip(pts, S):
        assert np.allclose(Sp, sum(c * s for c, s in zip(p, alg.sigma)))


@given(st.lists(finite, min_size=3, max_size=3), st.floats(0.1, 3.0))
def test_bk_anticommutes_with_dirac_operator(xi, m):
    alg = build_algebra(3, 4)
    D = alg.dirac_operator_real_direction(np.array(xi), m)
    assert anticommutator(alg.BK(), D).norm() < 1e-12


def test_corrupted_gamma2_breaks_conjugation():
    bad = corrupt_gamma2(build_algebra(3, 4))
    rep = verify_algebra(bad, trials=20, rng=0)
    assert rep["b_anticommutes_dirac_defect"] > 1e-3

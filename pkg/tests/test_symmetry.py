import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solerlab.clifford import build_algebra
from solerlab.errors import DomainError, UnsupportedSymmetryError
from solerlab.fields import Grid, SpinorField
from solerlab.symmetry import (BogoliubovElement, Charges, apply_bogoliubov, beta_density, check_null_condition,
                               compute_charges, conjugate_field, energy, null_defect,
                               predict_transformed_charges, pseudoscalar_noninvariance, su11_matrix)
from solerlab.waves import build_chi, build_phi

rapidity = st.floats(0.0, 2.5)
angle = st.floats(0.0, 2 * math.pi)
seeds = st.integers(0, 2**32 - 1)


def element(s, ta, tb):
    return BogoliubovElement(math.cosh(s) * np.exp(1j * ta), math.sinh(s) * np.exp(1j * tb))


def spinors(seed, N, P=6):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((N, P)) + 1j * rng.standard_normal((N, P))


def test_element_validation():
    with pytest.raises(DomainError):
        BogoliubovElement(1.0, 0.5)


@given(rapidity, angle, angle, rapidity, angle, angle)
def test_composition_matches_matrix_product(s1, a1, b1, s2, a2, b2):
    g, h = element(s1, a1, b1), element(s2, a2, b2)
    assert np.allclose(su11_matrix(g @ h), su11_matrix(g) @ su11_matrix(h), rtol=1e-12, atol=1e-12)


@given(rapidity, angle, angle, rapidity, angle, angle, seeds)
def test_action_is_a_homomorphism(s1, a1, b1, s2, a2, b2, seed):
    alg = build_algebra(3, 4)
    g, h = element(s1, a1, b1), element(s2, a2, b2)
    psi = spinors(seed, 4)
    lhs = apply_bogoliubov(g @ h, alg, psi)
    rhs = apply_bogoliubov(g, alg, apply_bogoliubov(h, alg, psi))
    assert np.allclose(lhs, rhs, atol=1e-10 * np.abs(lhs).max())


@given(rapidity, angle, angle, seeds)
def test_inverse(s, a, b, seed):
    alg = build_algebra(1, 2)
    g = element(s, a, b)
    psi = spinors(seed, 2)
    assert np.allclose(apply_bogoliubov(g.inverse(), alg, apply_bogoliubov(g, alg, psi)), psi, atol=1e-10)


@given(rapidity, angle, angle, seeds)
def test_beta_density_is_invariant(s, a, b, seed):
    for n, N in ((1, 2), (2, 2), (3, 4)):
        alg = build_algebra(n, N)
        psi = spinors(seed, N)
        g = element(s, a, b)
        d0, d1 = beta_density(alg, psi), beta_density(alg, apply_bogoliubov(g, alg, psi))
        assert np.allclose(d0, d1, atol=1e-10 * (1 + math.cosh(s) ** 2) * np.abs(psi).max() ** 2)


@given(rapidity, angle, angle, seeds)
def test_transformed_charges(s, a, b, seed):
    alg = build_algebra(3, 4)
    rng = np.random.default_rng(seed)
    grid = Grid.scattered(rng.standard_normal((6, 3)), rng.uniform(0.1, 1.0, 6))
    psi = spinors(seed, 4)
    g = element(s, a, b)
    c0 = compute_charges(alg, psi, grid)
    c1 = compute_charges(alg, apply_bogoliubov(g, alg, psi), grid)
    pr = predict_transformed_charges(g, c0)
    assert c1.Q == pytest.approx(pr.Q, rel=1e-10)
    assert abs(c1.Lambda - pr.Lambda) < 1e-10 * c1.Q
    assert abs(c1.invariant - c0.invariant) < 1e-10 * c1.Q**2


def test_charge_combinations():
    c = Charges(3.0, 1.0 + 2.0j)
    assert c.Q_plus == 2.0 and c.Q_minus == 1.0
    assert c.invariant == pytest.approx(9.0 - 5.0)


def test_no_conjugation_for_four_dimensions():
    alg = build_algebra(4, 4)
    with pytest.raises(UnsupportedSymmetryError):
        conjugate_field(alg, spinors(0, 4))
    assert compute_charges(alg, spinors(0, 4), Grid.scattered(np.zeros((6, 4)))).Lambda is None


def test_conjugation_swaps_phi_and_chi(profile_09, alg12):
    x = np.linspace(-5, 5, 41)[:, None]
    phi = build_phi(profile_09, [1.0], x, alg12)
    chi = build_chi(profile_09, [1.0], x, alg12)
    assert np.allclose(conjugate_field(alg12, phi), chi, atol=1e-15)
    assert np.allclose(conjugate_field(alg12, chi), phi, atol=1e-15)


@given(angle, seeds)
def test_null_data_has_vanishing_density(theta, seed):
    alg = build_algebra(3, 4)
    z = np.exp(1j * theta)
    raw = spinors(seed, 4)
    # B K (r + conj(z) B K r) = B K r + z r = z (r + conj(z) B K r)
    w = raw + np.conj(z) * conjugate_field(alg, raw)
    rep = check_null_condition(alg, w, z)
    assert rep["premise"] and rep["implication_holds"]
    assert rep["sup_beta_density"] < 1e-12 * np.abs(w).max() ** 2
    c = compute_charges(alg, w, Grid.scattered(np.zeros((6, 3))))
    assert abs(null_defect(alg, c, z)) < 1e-12 * c.Q


def test_null_condition_rejects_bad_phase():
    with pytest.raises(DomainError):
        check_null_condition(build_algebra(1, 2), spinors(0, 2), 2.0)


@given(rapidity, angle, angle, seeds)
def test_pseudoscalar_density_behaviour(s, a, b, seed):
    alg = build_algebra(3, 4)
    rep = pseudoscalar_noninvariance(alg, element(s, a, b), spinors(seed, 4, 1))
    assert rep["antisymmetry_defect"] == 0.0
    # the density is left unchanged by the whole group
    assert rep["invariant"]


def test_energy_is_group_invariant(profile_09, alg12, cubic):
    grid = Grid.periodic_line(40.0, 512)
    phi = SpinorField(build_phi(profile_09, [1.0], grid.points, alg12), grid)
    g = BogoliubovElement.boost(0.7, 0.3)
    e0 = energy(alg12, cubic, 1.0, phi)
    e1 = energy(alg12, cubic, 1.0, apply_bogoliubov(g, alg12, phi))
    assert abs(e1 - e0) < 1e-10 * abs(e0)

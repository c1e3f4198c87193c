import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from solerlab.errors import ConfigurationError, DomainError
from solerlab.profiles import (DkgProfile, Nonlinearity, SolverConfig, profile_residual, solve_dkg_profile,
                               solve_soler_profile, tail_slope, yukawa_apply)


@pytest.mark.parametrize("omega", [0.5, 0.8, 0.95])
def test_cubic_line_profile_matches_closed_form(omega, cubic):
    p = solve_soler_profile(omega, 1.0, 1, cubic)
    v, u = oracles.vu_1d_cubic(p.r, omega)
    assert np.max(np.abs(p.v - v)) < 1e-9
    assert np.max(np.abs(p.u - u)) < 1e-9
    assert p.charge() == pytest.approx(oracles.charge_1d_cubic(omega), rel=1e-8)


def test_value_at_origin(profile_09):
    # tau(0) = 2 (m - omega) and u(0) = 0
    assert profile_09.v0**2 == pytest.approx(0.2, rel=1e-10)
    assert profile_09.u[0] == 0.0


def test_residual_and_ratio(profile_09):
    assert max(profile_residual(profile_09)) < 1e-8
    assert profile_09.u_less_v and profile_09.sup_u_over_v() < 1


def test_tail(profile_09):
    assert tail_slope(profile_09) == pytest.approx(-math.sqrt(1 - 0.81), rel=0.01)
    v, u = profile_09.evaluate(np.array([profile_09.R * 1.5, profile_09.R * 2.0]))
    assert 0 < v[1] < v[0] and 0 < u[1] < u[0]


def test_evaluate_is_even_and_continuous(profile_09):
    r = np.array([0.3, -0.3, profile_09.R - 1e-9, profile_09.R + 1e-9])
    v, u = profile_09.evaluate(r)
    assert v[0] == v[1]
    assert v[2] == pytest.approx(v[3], rel=1e-5) and u[2] == pytest.approx(u[3], rel=1e-5)


@pytest.mark.parametrize("n", [2, 3])
def test_higher_dimensional_ground_states(n, cubic):
    p = solve_soler_profile(0.9, 1.0, n, cubic)
    assert max(profile_residual(p)) < 1e-8
    assert np.all(p.v > 0) and p.u_less_v
    assert np.all(p.u[1:] > 0)


def test_supercritical_power(cubic):
    p = solve_soler_profile(0.95, 1.0, 1, Nonlinearity.power(3.0))
    assert max(profile_residual(p)) < 1e-8
    assert p.nl.k == 3.0


@pytest.mark.parametrize("omega,m", [(1.5, 1.0), (0.0, 1.0), (-0.2, 1.0), (0.5, -1.0)])
def test_frequency_outside_gap(omega, m, cubic):
    with pytest.raises(DomainError):
        solve_soler_profile(omega, m, 1, cubic)


def test_bad_dimension(cubic):
    with pytest.raises(ConfigurationError):
        solve_soler_profile(0.9, 1.0, 5, cubic)


@given(st.floats(0.5, 4.0), st.floats(0.05, 2.0))
def test_power_derivative_and_primitive(k, tau):
    nl = Nonlinearity.power(k)
    d = 1e-6
    assert nl.derivative(tau) == pytest.approx((nl(tau + d) - nl(tau - d)) / (2 * d), rel=1e-5)
    assert nl.primitive(tau) == pytest.approx(tau ** (k + 1) / (k + 1), rel=1e-12)


def test_tabulated_reproduces_power():
    t = np.linspace(0.0, 2.0, 4001)
    tab = Nonlinearity.tabulated(t, t**2)
    x = np.array([0.1, 0.77, 1.5])
    assert np.allclose(tab(x), x**2, atol=1e-6)
    p = solve_soler_profile(0.9, 1.0, 1, tab)
    ref = solve_soler_profile(0.9, 1.0, 1, Nonlinearity.power(2.0))
    assert p.v0 == pytest.approx(ref.v0, rel=1e-5)


@pytest.mark.parametrize("n", [1, 3])
def test_yukawa_resolvent(n):
    r = np.arange(0.0, 20.0, 5e-4)
    phi, src = oracles.gaussian_yukawa_pair(r, 1.3, n)
    assert np.max(np.abs(yukawa_apply(src, 1.3, n, r) - phi)) < 1e-6


def test_dkg_fixed_point():
    p = solve_dkg_profile(0.95, 1.0, 2.0, 1, SolverConfig(h=2e-4))
    assert isinstance(p, DkgProfile)
    # the field the Dirac profile saw is the screened potential of its own density
    field = yukawa_apply(p.v**2 - p.u**2, 2.0, 1, p.r)
    assert np.max(np.abs(field - p.f_field)) < 1e-6 * np.max(np.abs(p.Phi))
    assert max(profile_residual(p)) < 1e-7

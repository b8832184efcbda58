import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from lobachevsky_ho.errors import DomainError, RangeError
from lobachevsky_ho.geometry import (ModeSpec, ModelParams, check_reduced_radius, flat_potential,
                                     half_density_weight, params_from,
                                     rho_of_xi_minus_one, params_from_a2,
                                     params_from_q, potential, rho_of_xi, xi_minus_one, xi_of_rho)


def test_params_from_examples():
    p = params_from(2.0, 1.0)
    assert (p.q, p.theta, p.R) == (2.0, -1.0, -0.5)
    p = params_from(1.0, 1.0)
    assert p.q == 0.5 and p.theta == -0.0625
    assert params_from_a2(10.0).q == 5.0


@pytest.mark.parametrize("q, omega, a", [(0.5, 1.0, 1.0), (5.0, 1.0, math.sqrt(10.0)), (2.0, 4.0, 1.0)])
def test_params_from_q(q, omega, a):
    p = params_from_q(q, omega)
    assert p.a == pytest.approx(a, rel=1e-15)
    assert p.q == q


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_params_reject_bad_input(bad):
    with pytest.raises(DomainError):
        params_from_q(bad)
    with pytest.raises(DomainError):
        ModelParams(1.0, bad)


def test_mode_spec():
    assert ModeSpec(-3).m2 == 9
    with pytest.raises(DomainError):
        ModeSpec(1.5)


def test_potential_examples():
    p = params_from(1.0, 2.0)
    assert potential(0.0, p) == 0.0
    assert potential(math.asinh(1.0), p) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("reach, margin", [(0.8, 0.10), (1.0, 0.15)])
def test_potential_flat_limit_bound(reach, margin):
    # sinh(x)**2 - x**2 = x**4/3 (1 + 2 x**2/15 + ...); the ratio hits 1.1 near x = 0.85
    for a in (3.0, 10.0, 100.0):
        p = params_from(a, 1.3)
        r = np.linspace(1e-3, reach, 200) * a
        dev = np.abs(potential(r, p) - flat_potential(r, 1.3))
        assert np.all(dev <= 1.3 ** 2 * r ** 4 / (12 * a * a) * (1 + margin))


@given(st.floats(0, 50), st.floats(1e-6, 10))
def test_potential_increasing(r1, dr):
    p = params_from(1.7, 0.8)
    assert potential(r1 + dr, p) > potential(r1, p)


def test_xi_examples():
    assert xi_of_rho(0.0, 2.0) == 1.0
    assert rho_of_xi(1.0, 2.0) == 0.0
    assert xi_of_rho(3.0 * math.log(2 + math.sqrt(3)), 3.0) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(DomainError):
        rho_of_xi(0.999, 1.0)


@given(st.floats(1e-6, 30), st.floats(0.1, 10))
def test_round_trip_via_xi_minus_one(t, a):
    rho = t * a
    assert rho_of_xi_minus_one(xi_minus_one(rho, a), a) == pytest.approx(rho, rel=1e-12)


@given(st.floats(0.02, 30), st.floats(0.1, 10))
def test_round_trip_via_xi(t, a):
    # a double xi = cosh(t) keeps about log10(t**2 / eps) digits of t; 1e-12 needs t >~ 0.015
    rho = t * a
    assert rho_of_xi(xi_of_rho(rho, a), a) == pytest.approx(rho, rel=1e-12)


def test_xi_minus_one_small_radius():
    rho = 1e-9
    assert xi_minus_one(rho, 1.0) == pytest.approx(0.5e-18, rel=1e-12)


def test_reduced_radius_guard():
    check_reduced_radius(699.0, 1.0)
    with pytest.raises(RangeError):
        check_reduced_radius(701.0, 1.0)


def test_weight_examples():
    assert half_density_weight(0.0, 2.0) == 0.0
    assert half_density_weight(math.asinh(1.0), 1.0) == pytest.approx(1.0, rel=1e-15)


def test_weight_preserves_norm():
    # d xi = sinh(rho/a)/a d rho, so |w(rho) f(cosh(rho/a))|**2 integrates to |f|**2 over xi
    a = 1.7
    f = lambda xi: (xi - 1) * np.exp(-((xi - 3) ** 2))  # noqa: E731
    lhs = quad(lambda xi: f(xi) ** 2, 1, 20, epsabs=0, epsrel=1e-12)[0]
    rhs = quad(lambda r: (half_density_weight(r, a) * f(np.cosh(r / a))) ** 2,
               0, a * np.arccosh(20), epsabs=0, epsrel=1e-12, limit=200)[0]
    assert rhs == pytest.approx(lhs, rel=1e-10)

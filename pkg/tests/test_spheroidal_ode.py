import math

import numpy as np
import pytest

from lobachevsky_ho import spheroidal_ode as so
from lobachevsky_ho.eigensolver import refine_root
from lobachevsky_ho.errors import ConfigurationError, DomainError
from lobachevsky_ho.geometry import params_from_q


def test_rhs_examples():
    c = so.SpheroidalCoeffs(lam=1.0, theta=-1.0, m=0)
    assert so.ode_rhs(2.0, 1.0, 0.0, c)[1] == pytest.approx(13 / 3, rel=1e-15)
    assert so.ode_rhs(2.0, 0.0, 1.0, so.SpheroidalCoeffs(7.3, -1.0, 0))[1] == pytest.approx(-4 / 3, rel=1e-15)
    assert so.ode_rhs(2.0, 1.0, 0.0, so.SpheroidalCoeffs(0.0, 0.0, 1))[1] == pytest.approx(1 / 9, rel=1e-15)
    with pytest.raises(DomainError):
        so.ode_rhs(1.0, 1.0, 0.0, c)


def test_log_rhs_is_chain_rule():
    c = so.SpheroidalCoeffs(lam=-2.3, theta=-0.7, m=0)
    s = -1.3
    w = math.exp(s)
    psi, dpsi = 0.8, -1.7
    d1, d2 = so.ode_rhs(1 + w, psi, dpsi, c)
    z, dz = so.ode_rhs_log(s, psi, w * dpsi, c)
    assert z == pytest.approx(w * d1, rel=1e-15)
    assert dz == pytest.approx(w * d1 + w * w * d2, rel=1e-13)


@pytest.mark.parametrize("q, xi", [(1.0, 40.0), (0.5, 61.0)])
def test_tail_ratio(q, xi):
    st = so.tail_state(xi, q)
    assert st.log_ratio() == pytest.approx(-(q + 1 / xi), rel=1e-15)
    assert 1.0 <= st.psi < 2.0
    assert math.ldexp(st.psi, st.scale_exp) == pytest.approx(math.exp(-q * xi) / (q * xi), rel=1e-13)


def test_tail_preconditions():
    with pytest.raises(ConfigurationError, match="tail_threshold"):
        so.tail_state(20.0, 1.0)
    with pytest.raises(ConfigurationError):
        so.tail_state(5.0, 100.0)


def test_homogeneity(p05, golden):
    G = golden[0]
    st = so.tail_state(so.default_xi_start(0.5), 0.5)
    doubled = so.OdeState(st.xi, 2 * st.psi, 2 * st.dpsi, st.scale_exp)
    a = so.integrate_inward(G[1], p05, start=st)
    b = so.integrate_inward(G[1], p05, start=doubled)
    for x, y in ((a.psi, b.psi), (a.dpsi, b.dpsi)):
        assert math.ldexp(y, b.scale_exp) == 2 * math.ldexp(x, a.scale_exp)
    # re-representing the same ray changes nothing
    c = so.integrate_inward(G[1], p05, start=st.rescaled(-1))
    assert math.ldexp(c.psi, c.scale_exp) == math.ldexp(a.psi, a.scale_exp)


def test_log_identity(p05, golden):
    E = golden[0][0]
    w = np.array([0.5, 0.05])
    psi, dpsi, exps = so.sample_solution(E, p05, xi_minus_one=w)
    st = so.integrate_log(so.to_log(so.integrate_inward(E, p05)), E, p05, math.log(0.05))
    assert st.scale_exp == exps[1]
    assert st.psi == pytest.approx(psi[1], rel=1e-10)
    assert st.dpsi_ds == pytest.approx(0.05 * dpsi[1], rel=1e-10)


def test_defect_vanishes_at_golden(p05, golden):
    for G in golden[0]:
        d = so.boundary_defect(G, p05)
        sw = so.integrate_inward(G, p05)
        assert abs(d.scaled_to(sw.scale_exp)) <= 1e-6 * abs(sw.psi)


def test_defect_large_between_roots(p05, golden):
    G = golden[0]
    at0 = so.boundary_defect(G[0], p05)
    mid = so.boundary_defect(0.5 * (G[0] + G[1]), p05)
    assert abs(mid.scaled_to(at0.scale_exp)) >= 1e3 * abs(at0.value)


def test_defect_shrinks_toward_one(p05, golden):
    G0 = golden[0][0]
    w = np.array([0.5, 1e-2, 1e-4])
    _, dpsi, exps = so.sample_solution(G0, p05, xi_minus_one=w)
    flux, _ = so.common_scale(w * dpsi, exps)
    assert abs(flux[0]) > abs(flux[1]) > abs(flux[2])


def test_sign_structure(p05, golden):
    G = golden[0]
    below = so.boundary_defect(G[0] - 0.3, p05)
    between = so.boundary_defect(0.5 * (G[0] + G[1]), p05)
    assert math.copysign(1, below.value) != math.copysign(1, between.value)


def test_sign_changes_match_oracle(p05, golden):
    G = golden[0]
    grid = np.linspace(G[0] - 1, G[2] + 1, 200)
    s = np.sign([so.boundary_defect(E, p05).value for E in grid])
    assert np.count_nonzero(s[1:] != s[:-1]) == 3


def test_two_start_consistency(p05, golden):
    for G in golden[0]:
        br = (G - 0.05, G + 0.05)
        x0 = so.default_xi_start(0.5)
        a, _ = refine_root(br, p05, 1e-13, xi_start=x0)
        b, _ = refine_root(br, p05, 1e-13, xi_start=x0 + 10)
        assert abs(a - b) <= 1e-9 * abs(a)


def test_residual_estimate_small(p05, golden):
    d = so.boundary_defect(golden[0][1] + 0.2, p05)
    assert d.usable and d.s_eval == so.DEFAULT_S_EVAL - so.S_GAP


def test_sample_solution_requires_points_above_one(p05):
    with pytest.raises(DomainError):
        so.sample_solution(1.0, p05, xi_minus_one=[0.0])
    with pytest.raises(DomainError):
        so.sample_solution(1.0, p05)


def test_common_scale():
    v, ref = so.common_scale([1.0, 1.0], [3, 1])
    assert ref == 3 and list(v) == [1.0, 0.25]

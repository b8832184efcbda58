"""Shooting for the spheroidal equation with decaying data at large xi.

The eigenvalue equation of the rescaled radial Hamiltonian reads

    (1 - xi**2) psi'' - 2 xi psi' + (lam + 4 theta (1 - xi**2) - m**2/(1 - xi**2)) psi = 0

with ``lam = -E_tilde - 1/4`` and ``theta = -q**2/4``.  The solution that is
square integrable at infinity behaves like ``exp(-q xi)/(q xi)``.  It is
started there, integrated inward to ``xi_switch`` in xi, and then continued in
``s = log(xi - 1)`` where, for m = 0, ``psi(s) -> A + B s`` as s -> -inf.
The eigenvalue condition is ``B = lim (xi - 1) psi'(xi) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _dopri
from .errors import ConfigurationError, DomainError, ExtrapolationError, IntegrationError
from .geometry import ModelParams

DEFAULT_RTOL = 1e-10
DEFAULT_TAIL_THRESHOLD = 30.0
MIN_XI_START = 10.0
DEFAULT_XI_SWITCH = 2.0
DEFAULT_S_EVAL = -12.0
S_GAP = 2.0
DEEPEN_STEP = 4.0
MAX_DEEPEN = 3
CONVERGENCE_RATIO = 1e-3
MAX_STEPS = 2_000_000

# Test harness hook: -1 flips the sign of lambda inside the integrator only.
_LAMBDA_SIGN = 1.0


@dataclass(frozen=True)
class SpheroidalCoeffs:
    lam: float
    theta: float
    m: int = 0

    @classmethod
    def from_energy(cls, E_tilde, p: ModelParams, m=0):
        return cls(lam=-float(E_tilde) - 0.25, theta=p.theta, m=int(m))

    @property
    def q2(self):
        return -4.0 * self.theta


@dataclass(frozen=True)
class OdeState:
    """(psi, dpsi) at xi; the un-rescaled pair is (psi, dpsi) * 2**scale_exp."""

    xi: float
    psi: float
    dpsi: float
    scale_exp: int = 0

    def log_ratio(self):
        return self.dpsi / self.psi

    def rescaled(self, k):
        """Same solution ray with the exponent bumped by k (exact)."""
        return OdeState(self.xi, math.ldexp(self.psi, -k), math.ldexp(self.dpsi, -k),
                        self.scale_exp + k)


@dataclass(frozen=True)
class LogState:
    """(psi, dpsi/ds) at s = log(xi - 1) with the same scale convention."""

    s: float
    psi: float
    dpsi_ds: float
    scale_exp: int = 0

    @property
    def xi(self):
        return 1.0 + math.exp(self.s)


@dataclass(frozen=True)
class DefectResult:
    value: float
    residual_estimate: float
    scale_exp: int
    s_eval: float = DEFAULT_S_EVAL - S_GAP
    psi: float = float("nan")

    @property
    def floor(self):
        return abs(self.psi)

    @property
    def usable(self):
        return self.residual_estimate <= CONVERGENCE_RATIO * (abs(self.value) + self.floor)

    def scaled_to(self, ref_exp):
        """Defect expressed on the common scale 2**ref_exp."""
        return math.ldexp(self.value, self.scale_exp - ref_exp)


def ode_rhs(xi, psi, dpsi, c: SpheroidalCoeffs):
    """(psi', psi'') from the spheroidal equation solved for psi''."""
    if not xi > 1.0:
        raise DomainError(f"xi must exceed 1, got {xi!r}")
    return _dopri.rhs(_dopri.MODE_XI, float(xi), float(psi), float(dpsi),
                      float(c.lam), float(c.q2), float(c.m * c.m))


def ode_rhs_log(s, psi, dpsi_ds, c: SpheroidalCoeffs):
    """Right-hand side in s = log(xi - 1) (m = 0 only)."""
    if c.m != 0:
        raise DomainError("the logarithmic form is implemented for m = 0 only")
    return _dopri.rhs(_dopri.MODE_LOG, float(s), float(psi), float(dpsi_ds),
                      float(c.lam), float(c.q2), 0.0)


def default_xi_start(q, tail_threshold=DEFAULT_TAIL_THRESHOLD):
    return max(MIN_XI_START, 1.0 + tail_threshold / q)


def tail_state(xi_start, q, tail_threshold=DEFAULT_TAIL_THRESHOLD) -> OdeState:
    """Leading asymptotics exp(-q xi)/(q xi) of the decaying solution."""
    # slack so that default_xi_start's own 1 + threshold/q passes after rounding
    if q * (xi_start - 1.0) < tail_threshold * (1.0 - 1e-12):
        raise ConfigurationError(
            f"tail_threshold: q (xi_start - 1) = {q * (xi_start - 1.0):g} is below {tail_threshold:g}")
    if xi_start < MIN_XI_START:
        raise ConfigurationError(f"xi_start = {xi_start:g} is below the minimum {MIN_XI_START:g}")
    log2f = (-q * xi_start - math.log(q * xi_start)) / math.log(2.0)
    sexp = math.floor(log2f)
    psi = 2.0 ** (log2f - sexp)
    return OdeState(xi_start, psi, -psi * (q + 1.0 / xi_start), int(sexp))


def _kappa(q):
    return q + 1.0


def _run(mode, x, x_end, y0, y1, sexp, c, rtol, h):
    out = _dopri.integrate(mode, float(x), float(x_end), float(y0), float(y1), int(sexp),
                           _LAMBDA_SIGN * c.lam, c.q2, float(c.m * c.m), float(rtol),
                           float(h), _kappa(math.sqrt(c.q2)), MAX_STEPS)
    x_r, y0, y1, sexp, h, _, status = out
    if status != _dopri.STATUS_OK:
        where = x_r if mode == _dopri.MODE_XI else 1.0 + math.exp(x_r)
        reason = "step size underflow" if status == _dopri.STATUS_UNDERFLOW else "step limit"
        raise IntegrationError(f"integration failed ({reason}) at xi = {where!r}", xi_reached=where)
    return y0, y1, int(sexp), h


def integrate_inward(E_tilde, p: ModelParams, m=0, xi_start=None, xi_switch=DEFAULT_XI_SWITCH,
                     rtol=DEFAULT_RTOL, start: OdeState | None = None) -> OdeState:
    """Integrate the decaying solution from xi_start down to xi_switch."""
    if xi_start is None:
        xi_start = default_xi_start(p.q) if start is None else start.xi
    if not xi_start > xi_switch > 1.0:
        raise DomainError(f"need xi_start > xi_switch > 1, got {xi_start!r}, {xi_switch!r}")
    if start is None:
        start = tail_state(xi_start, p.q)
    c = SpheroidalCoeffs.from_energy(E_tilde, p, m)
    h0 = 0.05 / _kappa(p.q)
    y0, y1, sexp, _ = _run(_dopri.MODE_XI, start.xi, xi_switch, start.psi, start.dpsi,
                           start.scale_exp, c, rtol, h0)
    return OdeState(float(xi_switch), y0, y1, sexp)


def to_log(state: OdeState) -> LogState:
    w = state.xi - 1.0
    return LogState(math.log(w), state.psi, state.dpsi * w, state.scale_exp)


def integrate_log(state: LogState, E_tilde, p: ModelParams, s_end, rtol=DEFAULT_RTOL,
                  h=0.05) -> LogState:
    """Continue an m = 0 solution in s = log(xi - 1) down to s_end."""
    c = SpheroidalCoeffs.from_energy(E_tilde, p, 0)
    y0, y1, sexp, _ = _run(_dopri.MODE_LOG, state.s, s_end, state.psi, state.dpsi_ds,
                           state.scale_exp, c, rtol, h)
    return LogState(float(s_end), y0, y1, sexp)


def _extrapolate(s1, z1, s2, z2):
    # dpsi/ds = B + C exp(s) + O(exp(2s)); eliminate the C term
    e1, e2 = math.exp(s1), math.exp(s2)
    return (z2 * e1 - z1 * e2) / (e1 - e2)


def boundary_defect(E_tilde, p: ModelParams, *, rtol=DEFAULT_RTOL, xi_start=None,
                    xi_switch=DEFAULT_XI_SWITCH, s_eval=DEFAULT_S_EVAL,
                    strict=True) -> DefectResult:
    """Regularity defect lim_{xi -> 1+} (xi - 1) psi'(xi) for m = 0.

    dpsi/ds is read at s_eval and s_eval - 2; the two readings are combined
    into an extrapolated limit and their difference is the residual
    estimate.  If the residual test fails the evaluation point is moved
    deeper by 4, at most three times, before ExtrapolationError is raised
    (or the last result returned when ``strict`` is false).
    """
    sw = integrate_inward(E_tilde, p, 0, xi_start, xi_switch, rtol)
    st = to_log(sw)
    if st.s <= s_eval:
        raise ConfigurationError(f"s_eval = {s_eval:g} must lie below log(xi_switch - 1) = {st.s:g}")
    s1 = s_eval
    result = None
    for _ in range(MAX_DEEPEN + 1):
        st1 = integrate_log(st, E_tilde, p, s1, rtol)
        s2 = s1 - S_GAP
        st2 = integrate_log(st1, E_tilde, p, s2, rtol)
        z1 = math.ldexp(st1.dpsi_ds, st1.scale_exp - st2.scale_exp)
        z2 = st2.dpsi_ds
        result = DefectResult(value=_extrapolate(s1, z1, s2, z2), residual_estimate=abs(z1 - z2),
                              scale_exp=st2.scale_exp, s_eval=s2, psi=st2.psi)
        if result.usable:
            return result
        st = st2
        s1 = s2 - DEEPEN_STEP + S_GAP
    if strict:
        raise ExtrapolationError(
            f"defect at E_tilde={E_tilde!r} did not settle by s={result.s_eval:g}: "
            f"residual {result.residual_estimate:.3e} vs value {result.value:.3e}")
    return result


def sample_solution(E_tilde, p: ModelParams, xi=None, *, xi_minus_one=None, rtol=DEFAULT_RTOL,
                    xi_start=None, xi_switch=DEFAULT_XI_SWITCH):
    """psi and dpsi/dxi of the decaying m = 0 solution at the points ``xi``.

    Points may be given in any order; all must exceed 1.  Passing
    ``xi_minus_one`` instead of ``xi`` avoids cancellation close to xi = 1.
    Returns arrays (psi, dpsi, exps) with the true values psi * 2**exps.
    Points above xi_switch are reached in xi, the rest in s = log(xi - 1).
    """
    if (xi is None) == (xi_minus_one is None):
        raise DomainError("pass exactly one of xi and xi_minus_one")
    if xi is None:
        w = np.asarray(xi_minus_one, dtype=float)
        xi = 1.0 + w
    else:
        xi = np.asarray(xi, dtype=float)
        w = xi - 1.0
    if np.any(w <= 0.0):
        raise DomainError("sample points must satisfy xi > 1")
    if xi_start is None:
        xi_start = default_xi_start(p.q)
    xi_start = max(xi_start, float(np.max(xi)) + 1.0)
    order = np.argsort(-xi, kind="stable")
    psi = np.empty_like(xi)
    dpsi = np.empty_like(xi)
    exps = np.empty(xi.shape, dtype=np.int64)
    c = SpheroidalCoeffs.from_energy(E_tilde, p, 0)

    st = tail_state(xi_start, p.q)
    x, y0, y1, sexp = st.xi, st.psi, st.dpsi, st.scale_exp
    mode = _dopri.MODE_XI
    h = 0.05 / _kappa(p.q)
    for idx in order:
        target = xi[idx]
        if mode == _dopri.MODE_XI and target < xi_switch:
            y0, y1, sexp, h = _run(mode, x, xi_switch, y0, y1, sexp, c, rtol, h)
            mode = _dopri.MODE_LOG
            x, y1 = math.log(xi_switch - 1.0), y1 * (xi_switch - 1.0)
            h = 0.05
        if mode == _dopri.MODE_XI:
            y0, y1, sexp, h = _run(mode, x, target, y0, y1, sexp, c, rtol, h)
            x = target
            psi[idx], dpsi[idx] = y0, y1
        else:
            s_target = math.log(w[idx])
            y0, y1, sexp, h = _run(mode, x, s_target, y0, y1, sexp, c, rtol, h)
            x = s_target
            psi[idx], dpsi[idx] = y0, y1 / w[idx]
        exps[idx] = sexp
    return psi, dpsi, exps


def common_scale(values, exps):
    """Bring (values, exps) onto the largest exponent present."""
    exps = np.asarray(exps)
    ref = int(np.max(exps))
    return np.ldexp(np.asarray(values, dtype=float), (exps - ref).astype(np.int64)), ref

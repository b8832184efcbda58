"""Normalized radial eigenfunctions in L2(R+, drho) and flat-space references.

A shooting solution psi_tilde(xi) of the rescaled problem becomes

    psi(rho) = ((1/a) sinh(rho/a))**(1/2) * psi_tilde(cosh(rho/a)),

which lives in the same Hilbert space for every curvature radius, including
the flat case a = inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, IndexingConsistencyError, RangeError
from .geometry import (ModelParams, check_reduced_radius, flat_potential, half_density_weight,
                       potential, xi_minus_one)
from .spheroidal_ode import DEFAULT_RTOL, common_scale, sample_solution

DEFAULT_SAMPLES = 2000
TAIL_ACTION = 20.0
TAIL_RATIO = 1e-8
NODE_FLOOR = 1e-10
FLAT = "flat"


@dataclass
class RadialFunction:
    rho: np.ndarray
    values: np.ndarray
    n: int
    params_tag: object  # (a2, omega) or "flat"
    norm_residual: float = 0.0

    def norm2(self):
        return float(simpson(self.values ** 2, x=self.rho))

    @property
    def rho_max(self):
        return float(self.rho[-1])


# flat references ------------------------------------------------------------

def laguerre(n, x):
    """L_n(x) by the three-term recurrence (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}."""
    x = np.asarray(x, dtype=float)
    if n < 0:
        raise DomainError("n must be non-negative")
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def flat_values(n, omega, rho):
    rho = np.asarray(rho, dtype=float)
    u = 0.5 * omega * rho * rho
    return (-1) ** n * np.sqrt(omega * rho) * laguerre(n, u) * np.exp(-0.5 * u)


def flat_eigenfunction(n, omega=1.0, rho_grid=None) -> RadialFunction:
    """(-1)**n sqrt(omega rho) L_n(omega rho**2/2) exp(-omega rho**2/4).

    Exact eigenfunction of -d2/drho2 - 1/(4 rho**2) + omega**2 rho**2/4 with
    eigenvalue omega (2n + 1), unit-normalized in L2(R+, drho).
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if rho_grid is None:
        rho_grid = np.linspace(0.0, default_rho_max_flat(n, omega), DEFAULT_SAMPLES)
    rho = np.asarray(rho_grid, dtype=float)
    vals = flat_values(n, omega, rho)
    norm = simpson(vals ** 2, x=rho)
    return RadialFunction(rho, vals, n, FLAT, abs(1.0 - norm))


# sampling range ---------------------------------------------------------------

def _rho_max_for(V, E, scale):
    """Radius past the turning point where the WKB exponent reaches TAIL_ACTION."""
    hi = scale
    while V(hi) <= E:
        hi *= 2.0
    rho_t = brentq(lambda r: V(r) - E, 0.0, hi)

    def action(r):
        x = np.linspace(rho_t, r, 401)
        return simpson(np.sqrt(np.maximum(V(x) - E, 0.0)), x=x) - TAIL_ACTION

    hi = rho_t + scale
    while action(hi) < 0:
        hi = rho_t + 2.0 * (hi - rho_t)
    return brentq(action, rho_t, hi, xtol=1e-6)


def default_rho_max(E, p: ModelParams):
    return _rho_max_for(lambda r: potential(r, p), E, 1.0 / math.sqrt(p.omega))


def default_rho_max_flat(n, omega=1.0):
    return _rho_max_for(lambda r: flat_potential(r, omega), omega * (2 * n + 1),
                        1.0 / math.sqrt(omega))


# curved eigenfunctions -----------------------------------------------------

def count_nodes(values, floor=NODE_FLOOR):
    v = np.asarray(values)
    v = v[np.abs(v) > floor * np.max(np.abs(v))]
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def _first_lobe_sign(values):
    v = np.asarray(values)
    i = int(np.argmax(np.abs(v) > 1e-6 * np.max(np.abs(v))))
    return 1.0 if v[i] > 0 else -1.0


def sample_radial(ep, p: ModelParams, rho_max=None, n_samples=DEFAULT_SAMPLES, *,
                  rtol=DEFAULT_RTOL, check_nodes=True) -> RadialFunction:
    """Sample, normalize and sign-fix the eigenfunction of ``ep`` on [0, rho_max]."""
    if rho_max is None:
        rho_max = default_rho_max(ep.E, p)
    if n_samples < 3:
        raise DomainError("need at least 3 samples")
    rho = np.linspace(0.0, float(rho_max), int(n_samples))
    check_reduced_radius(rho, p.a)
    w = xi_minus_one(rho[1:], p.a)
    psi_t, _, exps = sample_solution(ep.E_tilde, p, xi_minus_one=w, rtol=rtol)
    psi_t, _ = common_scale(psi_t, exps)
    vals = np.zeros_like(rho)
    vals[1:] = half_density_weight(rho[1:], p.a) * psi_t

    peak = np.max(np.abs(vals))
    if abs(vals[-1]) >= TAIL_RATIO * peak:
        suggested = default_rho_max(ep.E, p) * 1.25
        while suggested <= rho_max:
            suggested *= 1.25
        raise RangeError(f"rho_max={rho_max:g} is too short: |psi(rho_max)|/max|psi| = "
                         f"{abs(vals[-1]) / peak:.2e}; try rho_max={suggested:.4g}",
                         suggested=suggested)
    vals /= math.sqrt(simpson(vals ** 2, x=rho))
    if _first_lobe_sign(vals) != (-1) ** ep.n:
        vals = -vals
    nodes = count_nodes(vals)
    if check_nodes and nodes != ep.n:
        raise IndexingConsistencyError(f"state n={ep.n} has {nodes} nodes")
    f = RadialFunction(rho, vals, ep.n, (p.a2, p.omega))
    f.norm_residual = abs(1.0 - f.norm2())
    return f


# comparisons ---------------------------------------------------------------

def _tail_mass(f: RadialFunction, r):
    mask = f.rho >= r
    if np.count_nonzero(mask) < 2:
        return 0.0
    return float(simpson(f.values[mask] ** 2, x=f.rho[mask]))


def overlap(f: RadialFunction, g: RadialFunction) -> float:
    """Integral of f g drho; grids are merged onto the finer one if they differ."""
    if f.rho.shape == g.rho.shape and np.array_equal(f.rho, g.rho):
        return float(simpson(f.values * g.values, x=f.rho))
    r = min(f.rho_max, g.rho_max)
    for h in (f, g):
        tail = _tail_mass(h, r)
        if tail > 1e-6:
            raise RangeError(f"grids cover different ranges; tail mass {tail:.2e} beyond rho={r:g}")
    fine = f.rho if np.median(np.diff(f.rho)) <= np.median(np.diff(g.rho)) else g.rho
    x = fine[fine <= r]
    fv = np.interp(x, f.rho, f.values)
    gv = np.interp(x, g.rho, g.values)
    return float(simpson(fv * gv, x=x))


def concentration(f: RadialFunction):
    """(<rho>, r90): mean radius and the radius holding 90% of the norm."""
    dens = f.values ** 2
    mean = float(simpson(f.rho * dens, x=f.rho))
    cdf = cumulative_simpson(dens, x=f.rho, initial=0.0)
    target = 0.9 * cdf[-1]
    i = int(np.searchsorted(cdf, target))
    spline = CubicSpline(f.rho, cdf)
    lo, hi = f.rho[max(i - 1, 0)], f.rho[min(i, len(f.rho) - 1)]
    r90 = brentq(lambda r: spline(r) - target, lo, hi, xtol=1e-14)
    return mean, float(r90)


def gram_matrix(funcs):
    k = len(funcs)
    G = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            G[i, j] = G[j, i] = overlap(funcs[i], funcs[j])
    return G


def rho_form_residual(f: RadialFunction, E, p: ModelParams | None, m=0, omega=1.0, window=(0.2, 0.8)):
    """Relative RMS of (-d2/drho2 + V_eff - E) psi over the middle of the grid.

    V_eff = (m**2 - 1/4) / (a**2 sinh(rho/a)**2) + V(rho); with p None the
    flat operator -d2/drho2 + (m**2 - 1/4)/rho**2 + omega**2 rho**2/4 is used.
    """
    rho, psi = f.rho, f.values
    h = rho[1] - rho[0]
    i0 = max(1, int(window[0] * len(rho)))
    i1 = min(len(rho) - 1, int(window[1] * len(rho)))
    r = rho[i0:i1]
    d2 = (psi[i0 + 1:i1 + 1] - 2.0 * psi[i0:i1] + psi[i0 - 1:i1 - 1]) / (h * h)
    if p is None:
        veff = (m * m - 0.25) / (r * r) + flat_potential(r, omega)
    else:
        veff = (m * m - 0.25) / (p.a2 * np.sinh(r / p.a) ** 2) + potential(r, p)
    res = -d2 + veff * psi[i0:i1] - E * psi[i0:i1]
    return float(np.sqrt(np.mean(res ** 2)) / np.sqrt(np.mean((E * psi[i0:i1]) ** 2)))

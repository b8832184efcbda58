"""Eigenvalues of the m = 0 radial Hamiltonian as roots of the boundary defect."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, oracle
from .errors import DomainError, LobachevskyError, RefinementError, SpectralConsistencyError
from .geometry import ModelParams, params_from_q
from .spheroidal_ode import DEFAULT_RTOL, boundary_defect

DEFAULT_TOL = 1e-10
DEFAULT_SCAN_POINTS = 200
MIN_POINTS_PER_GAP = 8
MAX_REFINE_ITER = 200
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Eigenpair:
    n: int
    E_tilde: float
    E: float
    lam: float
    err_estimate: float

    @classmethod
    def from_root(cls, n, E_tilde, p: ModelParams, err_estimate=0.0):
        E_tilde = _snap(float(E_tilde))
        return cls(n=int(n), E_tilde=E_tilde, E=physical_energy(E_tilde, p),
                   lam=-E_tilde - 0.25, err_estimate=float(err_estimate))

    @property
    def lambda_(self):
        return self.lam


def _snap(E_tilde):
    """Round to a grid on which -E_tilde - 1/4 is exact, so lam + E_tilde + 1/4 == 0."""
    quantum = math.ulp(2.0 * (abs(E_tilde) + 0.25))
    return round(E_tilde / quantum) * quantum


def physical_energy(E_tilde, p: ModelParams):
    """E = E_tilde / a**2 = E_tilde * omega / (2 q)."""
    return E_tilde * p.omega / (2.0 * p.q)


def energy_over_omega(E_tilde, q):
    return E_tilde / (2.0 * q)


def _defect_fn(p, **defect_kw):
    def f(E):
        return boundary_defect(E, p, **defect_kw)
    return f


def _tag(exc, **info):
    for k, v in info.items():
        setattr(exc, k, v)
    return exc


def bracket_scan(p: ModelParams, E_lo, E_hi, n_points=DEFAULT_SCAN_POINTS, **defect_kw):
    """Sign-change intervals of the defect on a uniform grid over [E_lo, E_hi]."""
    if not E_lo < E_hi:
        raise DomainError(f"need E_lo < E_hi, got {E_lo!r}, {E_hi!r}")
    if n_points < 16:
        raise DomainError(f"n_points must be at least 16, got {n_points}")
    grid = np.linspace(E_lo, E_hi, int(n_points))
    signs = np.empty(len(grid))
    f = _defect_fn(p, **defect_kw)
    for i, E in enumerate(grid):
        try:
            signs[i] = math.copysign(1.0, f(E).value)
        except LobachevskyError as exc:
            raise _tag(exc, E_tilde=float(E))
    idx = np.nonzero(signs[:-1] != signs[1:])[0]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx]


def refine_root(bracket, p: ModelParams, tol=DEFAULT_TOL, *, defect=None, **defect_kw):
    """Brent iteration kept inside ``bracket``.

    Stops once the bracket is no wider than tol * max(1, |E|) and returns
    its midpoint and half-width.  ``defect`` may replace the shooting defect
    by any scalar function (used in tests).
    """
    a, b = map(float, bracket)
    if defect is None:
        raw = _defect_fn(p, **defect_kw)
        ref = raw(a).scale_exp

        def defect(E):
            return raw(E).scaled_to(ref)

    fa, fb = defect(a), defect(b)
    if fa == 0.0:
        return a, 0.0
    if fb == 0.0:
        return b, 0.0
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise DomainError(f"defect has equal signs at {a!r} and {b!r}")

    c, fc = a, fa
    d = e = b - a
    for _ in range(MAX_REFINE_ITER):
        if math.copysign(1.0, fb) == math.copysign(1.0, fc):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = max(0.5 * tol * max(1.0, abs(b)), 2.0 * _EPS * abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1:
            return 0.5 * (b + c), abs(xm)
        if fb == 0.0:
            return b, 0.0
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                # secant
                pp = 2.0 * xm * s
                qq = 1.0 - s
            else:
                # inverse quadratic interpolation
                qa = fa / fc
                r = fb / fc
                pp = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0))
                qq = (qa - 1.0) * (r - 1.0) * (s - 1.0)
            if pp > 0:
                qq = -qq
            pp = abs(pp)
            if 2.0 * pp < min(3.0 * xm * qq - abs(tol1 * qq), abs(e * qq)):
                e, d = d, pp / qq
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = defect(b)
    raise RefinementError(f"no convergence in {MAX_REFINE_ITER} iterations; last bracket [{b!r}, {c!r}]")


def scan_window(p: ModelParams, n_max, xi_factor=oracle.DEFAULT_XI_FACTOR):
    """Scan window from the coarse oracle, and its lowest n_max + 2 values.

    The top edge is capped halfway between the n_max-th and (n_max+1)-th
    oracle eigenvalues so no root sits near either edge.
    """
    coarse = oracle.coarse_spectrum(p, n_max + 2, xi_factor=xi_factor)
    spread = coarse[n_max] - coarse[0]
    pad = max(1.0, 0.1 * spread)
    lo = coarse[0] - pad
    hi = min(coarse[n_max] + pad, 0.5 * (coarse[n_max] + coarse[n_max + 1]))
    return float(lo), float(hi), coarse


def eigenvalues(p: ModelParams, n_max=2, tol=DEFAULT_TOL, *, rtol=DEFAULT_RTOL,
                n_points=None, xi_factor=oracle.DEFAULT_XI_FACTOR, **defect_kw):
    """The lowest n_max + 1 eigenpairs of the m = 0 rescaled Hamiltonian."""
    if n_max < 0:
        raise DomainError(f"n_max must be non-negative, got {n_max}")
    lo, hi, coarse = scan_window(p, n_max, xi_factor)
    if n_points is None:
        gap = float(np.min(np.diff(coarse)))
        n_points = max(DEFAULT_SCAN_POINTS, int(math.ceil(MIN_POINTS_PER_GAP * (hi - lo) / gap)) + 1)
    brackets = bracket_scan(p, lo, hi, n_points, rtol=rtol, **defect_kw)
    expected = (oracle.coarse_count_below(p, hi, xi_factor=xi_factor)
                - oracle.coarse_count_below(p, lo, xi_factor=xi_factor))
    if len(brackets) != expected or expected != n_max + 1:
        raise SpectralConsistencyError(
            f"q={p.q!r}: {len(brackets)} defect sign changes in [{lo:.6g}, {hi:.6g}] "
            f"but the oracle counts {expected} eigenvalues (want {n_max + 1})")
    pairs = []
    for n, br in enumerate(brackets):
        E, half = refine_root(br, p, tol, rtol=rtol, **defect_kw)
        pairs.append(Eigenpair.from_root(n, E, p, half + _integration_error(E, half, br, p, rtol, defect_kw)))
    return pairs


def _integration_error(E, half, bracket, p, rtol, defect_kw):
    """Root shift expected from the integrator, |d(E)| / |d'(E)| at 10x tighter rtol."""
    lo, hi = bracket
    width = max(half, 1e-6 * max(1.0, abs(E)))
    a, b = max(lo, E - width), min(hi, E + width)
    fa = boundary_defect(a, p, rtol=rtol, **defect_kw)
    fb = boundary_defect(b, p, rtol=rtol, **defect_kw)
    fe = boundary_defect(E, p, rtol=rtol / 10.0, **defect_kw)
    slope = (fb.scaled_to(fe.scale_exp) - fa.scaled_to(fe.scale_exp)) / (b - a)
    if slope == 0.0:
        return 0.0
    return abs(fe.value / slope)


@dataclass
class SweepTable:
    rows: list = field(default_factory=list)  # (q, n, E_tilde, E_over_omega)
    metadata: dict = field(default_factory=dict)
    monotone: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)  # (q, message)

    @property
    def complete(self):
        return not self.failures

    def column(self, n):
        return [(r[0], r[3]) for r in self.rows if r[1] == n]


def monotone_flags(rows, n_max):
    flags = {}
    for n in range(n_max + 1):
        vals = [r[3] for r in sorted((r for r in rows if r[1] == n), key=lambda r: r[0])]
        flags[n] = all(b < a for a, b in zip(vals, vals[1:]))
    return flags


def sweep(q_values, omega=1.0, n_max=2, tol=DEFAULT_TOL, *, rtol=DEFAULT_RTOL, workers=1,
          fail_fast=True, xi_factor=oracle.DEFAULT_XI_FACTOR):
    """E_n(q)/omega for n <= n_max over ascending q values."""
    q_values = [float(q) for q in q_values]
    if any(not q > 0 for q in q_values):
        raise DomainError("q values must be positive")
    if any(b <= a for a, b in zip(q_values, q_values[1:])):
        raise DomainError("q values must be strictly ascending")

    def one(q):
        p = params_from_q(q, omega)
        try:
            return p.q, eigenvalues(p, n_max, tol, rtol=rtol, xi_factor=xi_factor), None
        except LobachevskyError as exc:
            if fail_fast:
                raise _tag(exc, q=p.q)
            return p.q, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, q_values))
    else:
        results = [one(q) for q in q_values]

    table = SweepTable(metadata={
        "omega": float(omega), "m": 0, "n_max": int(n_max), "tol": tol, "rtol": rtol,
        "xi_factor": xi_factor, "version": __version__,
    })
    for q, pairs, failure in results:
        if failure is not None:
            table.failures.append((q, failure))
            continue
        for ep in pairs:
            table.rows.append((q, ep.n, ep.E_tilde, energy_over_omega(ep.E_tilde, q)))
    table.monotone = monotone_flags(table.rows, n_max)
    return table

"""Finite-volume reference spectrum of the rescaled radial Hamiltonian.

The operator

    H_m = -d/dxi (xi**2 - 1) d/dxi + m**2/(xi**2 - 1) + q**2 (xi**2 - 1) - 1/4

acting in L2((1, inf), dxi) is discretized on a cell-centred mesh over
(1, Xi).  The singular endpoint xi = 1 is a cell face where the flux
coefficient vanishes, so the discrete operator selects the solution that is
bounded there without any extra boundary condition.  A Dirichlet condition
is imposed at the face xi = Xi through a ghost-cell reflection.

Eigenvalues of the resulting symmetric tridiagonal matrix are found by
bisection on Sturm counts and then Richardson-extrapolated in the mesh width.
This backend shares no code with the shooting solver and serves as its
independent check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import DomainError, RangeError
from .geometry import ModelParams

DEFAULT_XI_FACTOR = 80.0
DEFAULT_GRID_N = 40960
COARSE_GRID_N = 2048
BISECTION_RTOL = 1e-12


@dataclass
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    Xi: float
    m: int = 0
    p: ModelParams | None = field(default=None, repr=False)

    @property
    def N(self):
        return len(self.diag)

    def dense(self):
        """Dense copy of the matrix (small N only; used in tests)."""
        return (np.diag(self.diag) + np.diag(self.offdiag, 1)
                + np.diag(self.offdiag, -1))


def recommended_xi(q, xi_factor=DEFAULT_XI_FACTOR):
    return 1.0 + xi_factor / q


def assemble(p: ModelParams | None, m: int, Xi: float, N: int, *,
             flux=None, weight=None) -> TridiagonalOperator:
    """Assemble the finite-volume matrix of H_m on (1, Xi) with N cells.

    ``flux`` and ``weight`` override the flux coefficient p(xi) and the
    multiplicative term W(xi); they exist so the stencil can be tested in
    isolation.  The ghost-cell rule ``2 p(face)/h**2`` is applied at both
    ends; at xi = 1 it contributes nothing because p(1) = 0.
    """
    if not Xi > 1:
        raise DomainError(f"Xi must exceed 1, got {Xi!r}")
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N!r}")
    h = (Xi - 1.0) / N
    k = np.arange(N + 1, dtype=float)
    t = np.arange(N, dtype=float) + 0.5
    if flux is None:
        faces = k * h * (2.0 + k * h)  # xi**2 - 1 at xi = 1 + k h
    else:
        faces = np.asarray(flux(1.0 + k * h), dtype=float)
    if weight is None:
        if p is None:
            raise DomainError("either p or a weight override is required")
        if p.q ** 2 * (Xi * Xi - 1.0) > 1e300:
            raise RangeError(f"q**2 (Xi**2 - 1) overflows for q={p.q:g}, Xi={Xi:g}")
        u = t * h * (2.0 + t * h)  # xi**2 - 1 at cell centres
        W = m * m / u + p.q ** 2 * u - 0.25
    else:
        W = np.asarray(weight(1.0 + t * h), dtype=float)
    inv_h2 = 1.0 / (h * h)
    diag = (faces[:-1] + faces[1:]) * inv_h2 + W
    diag[0] += faces[0] * inv_h2
    diag[-1] += faces[-1] * inv_h2
    offdiag = -faces[1:-1] * inv_h2
    return TridiagonalOperator(diag=diag, offdiag=offdiag, h=h, Xi=float(Xi), m=int(m), p=p)


@numba.njit(cache=True)
def _sturm_count(diag, off2, x, pivmin):
    count = 0
    d = diag[0] - x
    if abs(d) < pivmin:
        d = -pivmin
    if d < 0:
        count += 1
    for i in range(1, diag.shape[0]):
        d = diag[i] - x - off2[i - 1] / d
        if abs(d) < pivmin:
            d = -pivmin
        if d < 0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect_lowest(diag, off2, k, lo0, hi0, rtol, pivmin):
    out = np.empty(k)
    lo_bound = lo0
    for i in range(k):
        lo = lo_bound
        hi = hi0
        # invariant: count(lo) <= i < count(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= rtol * max(abs(lo), abs(hi)) + pivmin or mid == lo or mid == hi:
                break
            if _sturm_count(diag, off2, mid, pivmin) <= i:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)
        lo_bound = lo
    return out


def _prepare(T):
    off2 = np.ascontiguousarray(T.offdiag * T.offdiag)
    scale = max(np.max(np.abs(T.diag)), 1.0)
    pivmin = np.finfo(float).tiny * max(np.max(off2, initial=0.0), 1.0) / np.finfo(float).eps
    return np.ascontiguousarray(T.diag), off2, scale, pivmin


def sturm_count(T: TridiagonalOperator, x: float) -> int:
    """Number of eigenvalues of T strictly below x."""
    diag, off2, _, pivmin = _prepare(T)
    return int(_sturm_count(diag, off2, float(x), pivmin))


def gershgorin(T: TridiagonalOperator):
    r = np.zeros(T.N)
    a = np.abs(T.offdiag)
    r[:-1] += a
    r[1:] += a
    return float(np.min(T.diag - r)), float(np.max(T.diag + r))


def lowest_k(T: TridiagonalOperator, k: int, rtol=BISECTION_RTOL) -> np.ndarray:
    """The k smallest eigenvalues of T, ascending, by Sturm bisection."""
    if not 1 <= k <= T.N:
        raise DomainError(f"k must lie in [1, {T.N}], got {k}")
    diag, off2, _, pivmin = _prepare(T)
    lo, hi = gershgorin(T)
    pad = 1e-12 * max(abs(lo), abs(hi), 1.0)
    return _bisect_lowest(diag, off2, int(k), lo - pad, hi + pad, rtol, pivmin)


def oracle_raw(p: ModelParams, m: int, k: int, N: int, Xi: float) -> np.ndarray:
    return lowest_k(assemble(p, m, Xi, N), k)


def richardson(v_fine, v_coarse):
    """O(h**2) extrapolation from meshes h and 2h and its error estimate."""
    v_fine = np.asarray(v_fine)
    v_coarse = np.asarray(v_coarse)
    return (4.0 * v_fine - v_coarse) / 3.0, np.abs(v_fine - v_coarse) / 3.0


def oracle_eigenvalues(p: ModelParams, m: int = 0, k: int = 3, N: int = DEFAULT_GRID_N,
                       Xi: float | None = None):
    """Lowest k eigenvalues with error bars as a list of (value, error) pairs.

    The error bar adds the Richardson remainder estimate to the change seen
    when the domain is stretched to Xi' = 1 + 1.5 (Xi - 1).
    """
    if Xi is None:
        Xi = recommended_xi(p.q)
    if N % 2:
        raise DomainError("N must be even for Richardson extrapolation")
    ext, err = richardson(oracle_raw(p, m, k, N, Xi), oracle_raw(p, m, k, N // 2, Xi))
    Xi_wide = 1.0 + 1.5 * (Xi - 1.0)
    ext_wide, _ = richardson(oracle_raw(p, m, k, N, Xi_wide),
                             oracle_raw(p, m, k, N // 2, Xi_wide))
    err = err + np.abs(ext_wide - ext)
    return [(float(v), float(e)) for v, e in zip(ext, err)]


def convergence_order(p: ModelParams, m=0, k=3, N=DEFAULT_GRID_N, Xi=None):
    """Observed order log2(|v(N/4)-v(N/2)| / |v(N/2)-v(N)|) per eigenvalue."""
    if Xi is None:
        Xi = recommended_xi(p.q)
    v1 = oracle_raw(p, m, k, N, Xi)
    v2 = oracle_raw(p, m, k, N // 2, Xi)
    v4 = oracle_raw(p, m, k, N // 4, Xi)
    return np.log2(np.abs(v4 - v2) / np.abs(v2 - v1))


def coarse_spectrum(p: ModelParams, k: int, m=0, N=COARSE_GRID_N, xi_factor=DEFAULT_XI_FACTOR):
    """Cheap unextrapolated eigenvalues used to seed root scans."""
    return oracle_raw(p, m, k, N, recommended_xi(p.q, xi_factor))


def coarse_count_below(p: ModelParams, x: float, m=0, N=COARSE_GRID_N,
                       xi_factor=DEFAULT_XI_FACTOR) -> int:
    return sturm_count(assemble(p, m, recommended_xi(p.q, xi_factor), N), x)


# golden files ---------------------------------------------------------------

def golden_document(p: ModelParams, m=0, k=3, N=DEFAULT_GRID_N, xi_factor=DEFAULT_XI_FACTOR):
    Xi = recommended_xi(p.q, xi_factor)
    vals = oracle_eigenvalues(p, m, k, N, Xi)
    return {
        "params": {"q": p.q, "omega": p.omega, "m": int(m)},
        "method": {
            "N": int(N),
            "Xi": Xi,
            "xi_factor": xi_factor,
            "extrapolation": "richardson O(h^2) over N and N/2; "
                             "error adds |shift| under Xi -> 1 + 1.5 (Xi - 1)",
            "bisection_rtol": BISECTION_RTOL,
        },
        "values": [{"n": n, "E_tilde": v, "err": e} for n, (v, e) in enumerate(vals)],
    }


def read_golden(path):
    doc = json.loads(Path(path).read_text())
    for key in ("params", "method", "values"):
        if key not in doc:
            raise ValueError(f"golden file {path} lacks '{key}'")
    return doc

"""Model parameters, the oscillator potential and the rho <-> xi coordinate maps.

Units are fixed: hbar = 1 and mass = 1/2, so the flat Hamiltonian is
``-Laplacian + omega**2 rho**2 / 4`` with spectrum ``omega * (2n + |m| + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeError

#: Largest rho/a accepted on eigen-solver paths (sinh overflows near 710).
MAX_REDUCED_RADIUS = 700.0


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the oscillator on the hyperbolic plane.

    Only ``a2`` (the squared curvature radius) and ``omega`` are stored
    independently; everything else is derived in ``__post_init__``.
    """

    a2: float
    omega: float = 1.0
    a: float = field(init=False)
    q: float = field(init=False)
    theta: float = field(init=False)
    R: float = field(init=False)

    def __post_init__(self):
        _check_positive("a2", self.a2)
        _check_positive("omega", self.omega)
        a2 = float(self.a2)
        omega = float(self.omega)
        q = a2 * omega / 2.0
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "a", math.sqrt(a2))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta", -q * q / 4.0)
        object.__setattr__(self, "R", -2.0 / a2)

    def as_dict(self):
        return {"a": self.a, "a2": self.a2, "omega": self.omega, "q": self.q,
                "theta": self.theta, "R": self.R}


@dataclass(frozen=True)
class ModeSpec:
    """Angular momentum sector; operators depend on ``m`` only through m**2."""

    m: int = 0

    def __post_init__(self):
        if int(self.m) != self.m:
            raise DomainError(f"m must be an integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def m2(self):
        return self.m * self.m


def params_from(a, omega=1.0):
    """Parameters from the curvature radius ``a`` and frequency ``omega``."""
    _check_positive("a", a)
    _check_positive("omega", omega)
    return ModelParams(a2=float(a) * float(a), omega=omega)


def params_from_a2(a2, omega=1.0):
    return ModelParams(a2=a2, omega=omega)


def params_from_q(q, omega=1.0):
    """Parameters with coupling ``q = a**2 * omega / 2`` fixed directly."""
    _check_positive("q", q)
    _check_positive("omega", omega)
    return ModelParams(a2=2.0 * float(q) / float(omega), omega=omega)


def potential(rho, p: ModelParams):
    """V(rho) = (a omega / 2)**2 sinh(rho/a)**2; saturates to inf on overflow."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("rho must be non-negative")
    with np.errstate(over="ignore"):
        s = np.sinh(rho / p.a)
        out = 0.25 * p.a2 * p.omega ** 2 * s * s
    return out[()] if out.ndim == 0 else out


def flat_potential(rho, omega=1.0):
    rho = np.asarray(rho, dtype=float)
    return 0.25 * omega ** 2 * rho * rho


def check_reduced_radius(rho, a):
    """Raise RangeError if any rho/a is past the sinh/cosh overflow threshold."""
    r = np.max(np.asarray(rho, dtype=float)) / a
    if r > MAX_REDUCED_RADIUS:
        raise RangeError(f"rho/a = {r:g} exceeds {MAX_REDUCED_RADIUS:g}; sinh would overflow")


def xi_of_rho(rho, a):
    """xi = cosh(rho / a)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("rho must be non-negative")
    out = np.cosh(rho / a)
    return out[()] if out.ndim == 0 else out


def rho_of_xi(xi, a):
    """rho = a * arccosh(xi), defined for xi >= 1."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 1) or np.any(np.isnan(xi)):
        raise DomainError("xi must be >= 1")
    out = a * np.arccosh(xi)
    return out[()] if out.ndim == 0 else out


def xi_minus_one(rho, a):
    """cosh(rho/a) - 1 computed without cancellation for small rho."""
    rho = np.asarray(rho, dtype=float)
    h = np.sinh(0.5 * rho / a)
    out = 2.0 * h * h
    return out[()] if out.ndim == 0 else out


def rho_of_xi_minus_one(w, a):
    """Inverse of xi_minus_one: rho = 2 a arcsinh(sqrt(w / 2)), exact near rho = 0."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise DomainError("xi - 1 must be >= 0")
    out = 2.0 * a * np.arcsinh(np.sqrt(0.5 * w))
    return out[()] if out.ndim == 0 else out


def half_density_weight(rho, a):
    """((1/a) sinh(rho/a))**(1/2).

    Multiplying a function of xi by this weight maps ``L2((1, inf), dxi)``
    isometrically onto ``L2(R+, drho)``, because dxi = (1/a) sinh(rho/a) drho.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("rho must be non-negative")
    out = np.sqrt(np.sinh(rho / a) / a)
    return out[()] if out.ndim == 0 else out

"""Quantum harmonic oscillator on the Lobachevsky (hyperbolic) plane.

Spectrum and eigenfunctions of H = -Laplacian - 1/(4 a**2) + V with
V(rho) = (a omega / 2)**2 sinh(rho / a)**2, computed by shooting on the
spheroidal equation and checked against a finite-volume oracle.
"""

__version__ = "0.1.0"

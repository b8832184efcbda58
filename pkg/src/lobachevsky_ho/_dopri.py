"""Dormand-Prince 5(4) kernel for the two-component linear spheroidal system.

Two coordinate modes share the kernel:

* mode 0 integrates (psi, dpsi/dxi) in xi for any m,
* mode 1 integrates (psi, dpsi/ds) in s = log(xi - 1) for m = 0.

The state is rescaled by powers of two whenever its magnitude leaves
[2**-32, 2**32]; the exponent is carried separately so nothing underflows.
"""

import math

import numba

MODE_XI = 0
MODE_LOG = 1

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

_BIG = 2.0 ** 32
_SMALL = 2.0 ** -32

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)


@numba.njit(cache=True)
def rhs(mode, x, y0, y1, lam, q2, m2):
    if mode == MODE_XI:
        u = (x - 1.0) * (x + 1.0)
        k = lam + q2 * u + m2 / u
        return y1, (k * y0 - 2.0 * x * y1) / u
    e = math.exp(x)
    u = e * (2.0 + e)
    k = lam + q2 * u
    return y1, e / (2.0 + e) * (k * y0 - y1)


@numba.njit(cache=True)
def _magnitude(mode, x, y0, y1):
    if mode == MODE_XI:
        return max(abs(y0), abs(y1) * (x - 1.0))
    return max(abs(y0), abs(y1))


@numba.njit(cache=True)
def integrate(mode, x, x_end, y0, y1, sexp, lam, q2, m2, rtol, h, kappa, max_steps):
    """Advance from x to x_end.

    Returns (x, y0, y1, sexp, h_next, nsteps, status).  The true solution is
    (y0, y1) * 2**sexp.  ``kappa`` is the inverse length scale used to weigh
    the derivative component in mode 0.
    """
    direction = 1.0 if x_end > x else -1.0
    h = direction * abs(h)
    nsteps = 0
    status = STATUS_OK
    if x == x_end:
        return x, y0, y1, sexp, h, nsteps, status
    f0, f1 = rhs(mode, x, y0, y1, lam, q2, m2)
    while (x_end - x) * direction > 0.0:
        if nsteps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if abs(h) < 1e-14 * max(1.0, abs(x)):
            status = STATUS_UNDERFLOW
            break
        step = h
        last = False
        if (x + step - x_end) * direction >= 0.0:
            step = x_end - x
            last = True

        k1a, k1b = f0, f1
        k2a, k2b = rhs(mode, x + C2 * step, y0 + step * A21 * k1a,
                       y1 + step * A21 * k1b, lam, q2, m2)
        k3a, k3b = rhs(mode, x + C3 * step,
                       y0 + step * (A31 * k1a + A32 * k2a),
                       y1 + step * (A31 * k1b + A32 * k2b), lam, q2, m2)
        k4a, k4b = rhs(mode, x + C4 * step,
                       y0 + step * (A41 * k1a + A42 * k2a + A43 * k3a),
                       y1 + step * (A41 * k1b + A42 * k2b + A43 * k3b), lam, q2, m2)
        k5a, k5b = rhs(mode, x + C5 * step,
                       y0 + step * (A51 * k1a + A52 * k2a + A53 * k3a + A54 * k4a),
                       y1 + step * (A51 * k1b + A52 * k2b + A53 * k3b + A54 * k4b),
                       lam, q2, m2)
        k6a, k6b = rhs(mode, x + step,
                       y0 + step * (A61 * k1a + A62 * k2a + A63 * k3a + A64 * k4a + A65 * k5a),
                       y1 + step * (A61 * k1b + A62 * k2b + A63 * k3b + A64 * k4b + A65 * k5b),
                       lam, q2, m2)
        n0 = y0 + step * (B1 * k1a + B3 * k3a + B4 * k4a + B5 * k5a + B6 * k6a)
        n1 = y1 + step * (B1 * k1b + B3 * k3b + B4 * k4b + B5 * k5b + B6 * k6b)
        x_new = x_end if last else x + step
        k7a, k7b = rhs(mode, x_new, n0, n1, lam, q2, m2)
        e0 = step * (E1 * k1a + E3 * k3a + E4 * k4a + E5 * k5a + E6 * k6a + E7 * k7a)
        e1 = step * (E1 * k1b + E3 * k3b + E4 * k4b + E5 * k5b + E6 * k6b + E7 * k7b)

        if mode == MODE_XI:
            mag = max(abs(y0), abs(n0), max(abs(y1), abs(n1)) / kappa)
            sc0 = rtol * mag
            sc1 = rtol * mag * kappa
        else:
            mag = max(abs(y0), abs(n0), abs(y1), abs(n1))
            sc0 = rtol * mag
            sc1 = sc0
        if mag == 0.0:
            err = 0.0
        else:
            err = max(abs(e0) / sc0, abs(e1) / sc1)

        if err <= 1.0:
            x = x_new
            y0, y1 = n0, n1
            f0, f1 = k7a, k7b
            nsteps += 1
            size = _magnitude(mode, x, y0, y1)
            if size > _BIG or (0.0 < size < _SMALL):
                _, ex = math.frexp(size)
                shift = 1 - ex
                y0 = math.ldexp(y0, shift)
                y1 = math.ldexp(y1, shift)
                f0 = math.ldexp(f0, shift)
                f1 = math.ldexp(f1, shift)
                sexp -= shift
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not last or abs(h) < abs(step):
                h = step * fac
            else:
                h = max(abs(h), abs(step) * fac) * direction
        else:
            h = step * max(0.2, 0.9 * err ** -0.2)
    return x, y0, y1, sexp, h, nsteps, status

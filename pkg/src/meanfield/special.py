"""Scalar special functions needed by the equilibrium and bound modules.

Modified Bessel functions I0, I1 are evaluated by their power series for
moderate arguments and by the large-argument asymptotic series beyond the
crossover; both branches are accurate to better than 1e-14 in relative terms
on [0, 700].  The Lambert W value at 1 (the root of w e^w = 1) is computed
once by Newton iteration; it gates the applicability window of the perturbed
log-Sobolev constants.
"""

from __future__ import annotations

import math

# Power series below, asymptotic series above.  At the crossover the first
# neglected asymptotic term is ~exp(-2x) ~ 2e-16 relative.
_SERIES_CUTOFF = 18.0


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order 0."""
    x = abs(float(x))
    if x <= _SERIES_CUTOFF:
        # I0(x) = sum_k (x^2/4)^k / (k!)^2, all terms positive.
        q = 0.25 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term <= 1e-18 * total:
                return total
    return _asymptotic(x, nu=0)


def bessel_i1(x: float) -> float:
    """Modified Bessel function of the first kind, order 1 (odd in x)."""
    ax = abs(float(x))
    sign = -1.0 if x < 0 else 1.0
    if ax <= _SERIES_CUTOFF:
        # I1(x) = (x/2) sum_k (x^2/4)^k / (k! (k+1)!)
        q = 0.25 * ax * ax
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + 1))
            total += term
            if term <= 1e-18 * total:
                return sign * 0.5 * ax * total
    return sign * _asymptotic(ax, nu=1)


def _asymptotic(x: float, nu: int) -> float:
    """Large-argument expansion I_nu(x) ~ e^x/sqrt(2 pi x) * sum_k u_k(nu)/x^k.

    u_0 = 1, u_k = u_{k-1} * -(4 nu^2 - (2k-1)^2) / (8 k x).  The series is
    truncated at its smallest term (it is divergent but alternating in
    magnitude growth beyond that point).
    """
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    while k < 60:
        k += 1
        factor = -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        nxt = term * factor
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * total


def bessel_ratio(x: float) -> float:
    """I1(x)/I0(x), stable for small x (returns 0 at x = 0)."""
    if x == 0.0:
        return 0.0
    return bessel_i1(x) / bessel_i0(x)


def lambert_w_at_one() -> float:
    """The Omega constant: unique real w with w e^w = 1, by Newton iteration."""
    w = 0.5
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - 1.0
        step = f / (ew * (1.0 + w))
        w -= step
        if abs(step) < 1e-16:
            break
    return w


def bernoulli_b(z):
    """B(z) = z / (e^z - 1), the exponential-fitting flux weight.

    Vectorized over numpy arrays; the removable singularity at 0 is filled
    with the series 1 - z/2 + z^2/12 for |z| < 1e-5 (error < 1e-21 there).
    """
    import numpy as np

    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1.0 - 0.5 * zs + zs * zs / 12.0
    zb = z[~small]
    out[~small] = zb / np.expm1(zb)
    return out

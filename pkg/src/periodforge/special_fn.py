"""Real polylogarithms, the complex dilogarithm and the Bloch-Wigner function.

Branch conventions: ``log`` is the principal logarithm (cut along the negative
real axis), so ``Li2`` has its cut on ``[1, inf)``.  On the cut itself we return
the limit from below, ``Li2(x - i0)``, which is what the principal logarithm
produces and what mpmath returns as well.  ``D(z)`` is continuous on the whole
plane, so the cut convention never leaks into it.

All functions accept scalars; :func:`dilog_complex` and :func:`bloch_wigner`
also accept numpy arrays and are vectorised, because the box integrand calls
them on millions of points.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

PI2_6 = math.pi**2 / 6.0
CATALAN = 0.91596559417721901505

# zeta(n) to 22 significant digits; larger n are summed directly.
ZETA = {
    2: 1.644934066848226436472,
    3: 1.2020569031595942854,
    4: 1.082323233711138191516,
    5: 1.036927755143369926331,
    6: 1.017343061984449139715,
    7: 1.00834927738192282684,
    8: 1.004077356197944339379,
    9: 1.002008392826082214418,
    10: 1.000994575127818085337,
    11: 1.000494188604119464559,
    12: 1.000246086553308048299,
    13: 1.000122713347578489147,
    14: 1.000061248135058704829,
    15: 1.000030588236307020494,
    16: 1.000015282259408651872,
}

# Double zeta value sum_{0<k<l} k^-3 l^-5.  Metadata only: nothing here computes
# multiple zeta values.
ZETA_3_5 = 0.037707672984847544011


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n with the convention B_1 = -1/2."""
    if n < 0:
        raise ValueError("n must be non-negative")
    b = [Fraction(1)]
    for m in range(1, n + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / (m + 1))
    return b[n]


def zeta_value(n: int) -> float:
    """Riemann zeta at an integer n >= 2."""
    if n < 2:
        raise ValueError(f"zeta({n}) is not defined here (need n >= 2)")
    if n in ZETA:
        return ZETA[n]
    # n > 16: 2^-17 ~ 7.6e-6, so a few dozen terms reach double precision
    total = 0.0
    for k in range(60, 0, -1):
        total += k ** (-float(n))
    return total


def _zeta_nonpositive(m: int) -> float:
    """zeta(-m) for integer m >= 0."""
    if m == 0:
        return -0.5
    return float((-1) ** m * bernoulli(m + 1) / (m + 1))


def binomial(a: int, b: int) -> int:
    """Exact binomial coefficient (python ints never overflow)."""
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


def polylog_real(n: int, x: float) -> float:
    """Li_n(x) for integer n >= 2 and real x in [-1, 1]."""
    if n < 2:
        raise ValueError("polylog_real needs n >= 2")
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"polylog_real needs |x| <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return zeta_value(n)
    if x < -0.5:
        # Li_n(x) + Li_n(-x) = 2^(1-n) Li_n(x^2)
        return 2.0 ** (1 - n) * polylog_real(n, x * x) - polylog_real(n, -x)
    if x <= 0.5:
        total, term, k = 0.0, x, 1
        while True:
            add = term / k**n
            total += add
            if abs(add) < 1e-18 * max(abs(total), 1e-300):
                return total
            k += 1
            term *= x
    return _polylog_log_series(n, math.log(x))


def _polylog_log_series(n: int, mu: float) -> float:
    # Li_n(e^mu) = sum_{k != n-1} zeta(n-k) mu^k/k! + mu^(n-1)/(n-1)! (H_{n-1} - log(-mu))
    # valid for |mu| < 2 pi; here mu = log x in [log 0.5, 0).
    harmonic = sum(1.0 / j for j in range(1, n))
    total = mu ** (n - 1) / math.factorial(n - 1) * (harmonic - math.log(-mu))
    for k in range(0, n - 1):
        total += zeta_value(n - k) * mu**k / math.factorial(k)
    k = n
    while True:
        # zeta(n - k) with n - k <= 0
        z = _zeta_nonpositive(k - n)
        add = z * mu**k / math.factorial(k)
        total += add
        if k > n + 4 and abs(mu**k / math.factorial(k)) < 1e-19:
            return total
        k += 1


@lru_cache(maxsize=1)
def _li2_bernoulli_coeffs(terms: int = 30) -> np.ndarray:
    # Li2(z) = sum_{k>=0} B_k u^(k+1)/(k+1)!,  u = -log(1 - z)
    return np.array([float(bernoulli(k)) / math.factorial(k + 1) for k in range(terms)])


def _li2_core(w):
    """Li2 on |w| <= 1, Re w <= 1/2 via the Bernoulli series in -log(1-w)."""
    u = -np.log1p(-w)
    coeffs = _li2_bernoulli_coeffs()
    acc = np.zeros_like(u)
    for c in coeffs[::-1]:
        acc = acc * u + c
    return acc * u


def dilog_complex(z):
    """Principal branch Li2(z) for complex scalars or arrays."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    flat, res = z.ravel(), out.ravel()

    big = np.abs(flat) > 1.0
    small = ~big
    if np.any(small):
        res[small] = _li2_unit_disk(flat[small])
    if np.any(big):
        zb = flat[big]
        # Li2(z) = -Li2(1/z) - pi^2/6 - log(-z)^2/2
        # on the cut take -z = -x + i0, i.e. the limit from below for z
        minus_z = np.where(zb.imag == 0, -zb.real + 0j, -zb)
        res[big] = -_li2_unit_disk(1.0 / zb) - PI2_6 - 0.5 * np.log(minus_z) ** 2
    return complex(res[0]) if scalar else out


def _li2_unit_disk(z):
    out = np.empty_like(z)
    left = z.real <= 0.5
    out[left] = _li2_core(z[left])
    one = z == 1.0
    out[one] = PI2_6
    right = ~left & ~one
    if np.any(right):
        zr = z[right]
        # Li2(z) = -Li2(1-z) + pi^2/6 - log(z) log(1-z)
        out[right] = -_li2_core(1.0 - zr) + PI2_6 - np.log(zr) * np.log1p(-zr)
    return out


def bloch_wigner(z):
    """Bloch-Wigner dilogarithm D(z) = Im Li2(z) + arg(1-z) log|z|.

    The argument is first moved into |w| <= 1, Re w <= 1/2 using
    D(z) = -D(1/z) = -D(1-z); there the Bernoulli series converges fast and
    the result is accurate to a few ulps of order one.
    """
    scalar = np.ndim(z) == 0
    shape = np.shape(z)
    z = np.asarray(z, dtype=complex).ravel()
    a = np.abs(z)
    b = np.abs(1.0 - z)
    out = np.zeros(z.shape, dtype=float)

    # D vanishes at 0 and 1 and on the real axis
    live = (a > 0) & (b > 0) & (z.imag != 0)
    case_z = live & (a <= b) & (a <= 1.0)
    case_1mz = live & ~case_z & (b <= 1.0)
    case_inv = live & ~case_z & ~case_1mz

    w = np.empty_like(z)
    sign = np.ones(z.shape)
    w[case_z] = z[case_z]
    w[case_1mz] = 1.0 - z[case_1mz]
    sign[case_1mz] = -1.0
    w[case_inv] = 1.0 / z[case_inv]
    sign[case_inv] = -1.0

    if np.any(live):
        wl = w[live]
        val = _li2_core(wl).imag + np.angle(1.0 - wl) * np.log(np.abs(wl))
        out[live] = sign[live] * val
    return float(out[0]) if scalar else out.reshape(shape)

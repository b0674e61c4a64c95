"""Special conformal transformations and the dilation anomaly of 4-point amplitudes.

    g_c x = (x + c x^2) / omega(c, x),   omega(c, x) = 1 + 2 c.x + c^2 x^2

g_c is inversion, translation by c, inversion.  omega is a multiplicative
cocycle, omega(c1 + c2, x) = omega(c1, x) omega(c2, g_{c1} x), and distances
transform as (g x - g y)^2 = (x - y)^2 / (omega(x) omega(y)).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .box_reduce import cross_ratios, one_loop_box, sqdist
from .periods_db import SymbolicPeriod


def _vec(x):
    return np.asarray(x, dtype=float)


def omega(c, x):
    c, x = _vec(c), _vec(x)
    cx = np.sum(c * x, axis=-1)
    return 1.0 + 2.0 * cx + np.sum(c * c, axis=-1) * np.sum(x * x, axis=-1)


def special_conformal(c, x, tol: float = 0.0):
    """g_c x; raises where omega vanishes (the point is sent to infinity)."""
    c, x = _vec(c), _vec(x)
    w = omega(c, x)
    if np.any(np.abs(w) <= tol) or np.any(w == 0):
        raise ZeroDivisionError("omega(c, x) = 0: x is mapped to infinity")
    x2 = np.sum(x * x, axis=-1, keepdims=True)
    return (x + c * x2) / np.asarray(w)[..., None]


def via_inversions(c, x):
    """The same map written as inversion, translation by c, inversion."""
    x = _vec(x)
    y = x / np.sum(x * x, axis=-1, keepdims=True) + _vec(c)
    return y / np.sum(y * y, axis=-1, keepdims=True)


def _rel(lhs, rhs):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    return np.abs(lhs - rhs) / np.maximum(np.abs(rhs), np.finfo(float).tiny)


def group_law_defect(c1, c2, x):
    """max |g_{c2} g_{c1} x - g_{c1+c2} x| / |g_{c1+c2} x|."""
    lhs = special_conformal(c2, special_conformal(c1, x))
    rhs = special_conformal(_vec(c1) + _vec(c2), x)
    num = np.linalg.norm(lhs - rhs, axis=-1)
    return num / np.maximum(np.linalg.norm(rhs, axis=-1), 1.0)


def cocycle_check(c1, c2, x):
    """Relative defect of omega(c1 + c2, x) = omega(c1, x) omega(c2, g_{c1} x)."""
    lhs = omega(_vec(c1) + _vec(c2), x)
    rhs = omega(c1, x) * omega(c2, special_conformal(c1, x))
    return _rel(lhs, rhs)


def propagator_covariance_check(c, xi, xj):
    """Relative defect of (g xi - g xj)^2 omega(xi) omega(xj) = (xi - xj)^2."""
    gi, gj = special_conformal(c, xi), special_conformal(c, xj)
    lhs = sqdist(gi, gj) * omega(c, xi) * omega(c, xj)
    return _rel(lhs, sqdist(xi, xj))


def cross_ratio_defect(c, points):
    """max relative change of (u, v) when all four points are moved by g_c."""
    pts = [_vec(p) for p in points]
    u0, v0 = cross_ratios(*pts)
    u1, v1 = cross_ratios(*[special_conformal(c, p) for p in pts])
    return np.maximum(_rel(u1, u0), _rel(v1, v0))


# -- dilation anomaly ---------------------------------------------------------------


def g4_amplitude(x1, x2, x3, x4):
    """Four-loop wheel amplitude with its hub integrated out.

    The rim cycle 1-2-3-4 carries propagators; the hub is the one-loop box.
    Homogeneous of degree -12.
    """
    rim = sqdist(x1, x2) * sqdist(x2, x3) * sqdist(x3, x4) * sqdist(x1, x4)
    return one_loop_box(x1, x2, x3, x4) / rim


def dilation_anomaly_4pt(
    amplitude: Callable,
    config: Sequence,
    lam: float,
    res_s: float = 0.0,
    weight: int = 12,
    reference: Callable | None = None,
):
    """Both sides of lam^w A(lam x) - A(x) = G4(x) res(S) log(lam) at distinct points.

    ``reference`` is G4 (defaults to :func:`g4_amplitude`); for an amplitude
    without subdivergence res_s = 0 and both sides vanish.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    pts = [_vec(p) for p in config]
    if len(pts) != 4:
        raise ValueError("need four points")
    for i in range(4):
        for j in range(i + 1, 4):
            if np.all(pts[i] == pts[j]):
                raise ValueError("configuration has coincident points")
    reference = reference or g4_amplitude
    lhs = lam**weight * amplitude(*[lam * p for p in pts]) - amplitude(*pts)
    rhs = reference(*pts) * res_s * math.log(lam)
    return float(lhs), float(rhs)


def nested_amplitude(res_s: float):
    """Toy order-one amplitude G4(x) (1 + res_s log(x13^2 x24^2) / 4).

    Away from diagonals it has the scaling law of a graph with one
    subdivergence: lam^12 A(lam x) - A(x) = G4(x) res_s log(lam).
    """

    def amp(x1, x2, x3, x4):
        scale = sqdist(x1, x3) * sqdist(x2, x4)
        return g4_amplitude(x1, x2, x3, x4) * (1.0 + 0.25 * res_s * np.log(scale))

    return amp


def compose_res2(res_g4: SymbolicPeriod, res_s: SymbolicPeriod) -> SymbolicPeriod:
    """res_2 of the nested graph: the product of the two residues."""
    return res_g4 * res_s

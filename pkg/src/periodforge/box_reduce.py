"""The one-loop box (four-point star integral) in closed form.

    int prod_{i=1..4} 1/(x_i - x)^2  d^4x/pi^2  =  Phi(u, v) / (x13^2 x24^2)

with the cross-ratios u = x12^2 x34^2/(x13^2 x24^2), v = x14^2 x23^2/(x13^2 x24^2)
and Phi(u, v) = 2 D(z)/Im z, where z z* = u and (1-z)(1-z*) = v.
"""

from __future__ import annotations

import numpy as np

from .graph_core import FeynGraph
from .special_fn import bloch_wigner

# below this |Im z| the quotient D(z)/Im z loses digits; use the real-axis limit
IMAG_CUTOFF = 2e-6


def sqdist(a, b):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.sum(d * d, axis=-1)


def cross_ratios(x1, x2, x3, x4):
    """(u, v) for four points; works on stacked arrays of shape (..., 4)."""
    d12, d34 = sqdist(x1, x2), sqdist(x3, x4)
    d13, d24 = sqdist(x1, x3), sqdist(x2, x4)
    d14, d23 = sqdist(x1, x4), sqdist(x2, x3)
    if np.any(np.asarray(d12 * d34 * d13 * d24 * d14 * d23) == 0):
        raise ValueError("cross-ratios need pairwise distinct points")
    denom = d13 * d24
    return d12 * d34 / denom, d14 * d23 / denom


def z_from_cross_ratios(u, v, check: bool = True):
    """Root z of z z* = u, (1-z)(1-z*) = v with Im z >= 0.

    Euclidean data always gives a non-positive discriminant; positive values
    from rounding are clipped to zero.  With ``check`` a clearly positive
    discriminant (cross-ratios no euclidean configuration can produce) raises.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s = 1.0 + u - v
    disc = s * s - 4.0 * u
    scale = np.maximum(s * s, 4.0 * u)
    if check and np.any(disc > 1e-9 * scale):
        raise ValueError("cross-ratios are not realised by euclidean points")
    # |z| = sqrt(u) and |1 - z| = sqrt(v) are known to full relative precision,
    # while Re z = (1 + u - v)/2 cancels badly near z = 0 or 1; keep Re z on
    # the segment both circles allow
    ru, rv = np.sqrt(u), np.sqrt(v)
    lo = np.maximum(-ru, 1.0 - rv)
    hi = np.minimum(ru, 1.0 + rv)
    re = np.where(lo <= hi, np.clip(0.5 * s, lo, hi), 0.5 * (lo + hi))
    im = np.sqrt(np.maximum(u - re * re, 0.0))
    return re + 1j * im


def phi_box(u, v, check: bool = True):
    """Phi(u, v) = 2 D(z)/Im z, continued to Im z = 0 by its real-axis limit."""
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    z = np.atleast_1d(z_from_cross_ratios(u, v, check))
    out = np.empty(z.shape)
    near = np.abs(z.imag) < IMAG_CUTOFF
    far = ~near
    out[far] = 2.0 * bloch_wigner(z[far]) / z[far].imag
    if np.any(near):
        x = z[near].real
        uu = np.broadcast_to(u, z.shape)[near]
        vv = np.broadcast_to(v, z.shape)[near]
        out[near] = _phi_real_limit(x, uu, vv)
    return float(out[0]) if scalar else out


def _phi_real_limit(x, u, v):
    # 2 dD/dy at y = 0 equals -2 log|1-x|/x - 2 log|x|/(1-x); written with
    # log v = 2 log|1-x| and log u = 2 log|x|, and with the removable
    # singularities at x = 0 and x = 1 replaced by their Taylor expansions
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(x) > 1e-7, -np.log(v) / x, 2.0 + x)
        b = np.where(np.abs(1.0 - x) > 1e-7, -np.log(u) / (1.0 - x), 2.0 + (1.0 - x))
    return a + b


def one_loop_box(x1, x2, x3, x4):
    """Closed-form box integral; points may be stacked arrays of shape (..., 4)."""
    u, v = cross_ratios(x1, x2, x3, x4)
    # points are euclidean by construction; only rounding can push disc > 0
    return phi_box(u, v, check=False) / (sqdist(x1, x3) * sqdist(x2, x4))


def reducible_vertices(g: FeynGraph) -> list[int]:
    """Internal degree-4 vertices with four distinct neighbours.

    Their star integral is a one-loop box and can be done in closed form.
    """
    out = []
    for v in range(g.vertex_count):
        if g.external_legs[v] == 0 and g.degree(v) == 4 and len(g.neighbors(v)) == 4:
            out.append(v)
    return out

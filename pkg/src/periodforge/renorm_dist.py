"""Renormalization of homogeneous amplitudes by analytic regularization.

An amplitude G on R^N homogeneous of degree -N - kappa (kappa >= 0) is not
locally integrable at the origin.  Multiplying by rho(x)^eps (rho a degree-one
seminorm) gives a distribution meromorphic in eps with a simple pole whose
residue is supported at the origin; subtracting the pole defines the
renormalized distribution G^rho.

Everything is computed in euclidean polar coordinates x = r w.  Along a ray
a test function p(x) exp(-a|x - c|^2) is P(r) exp(Q(r)) with P a polynomial
and Q quadratic, so radial derivatives and Taylor coefficients are exact.
Angular integrals use product Gauss rules on S^{N-1} (random directions when
N > 6).  Pairings are normalised by pi^{N/2}, i.e. the measure is
d^N x / pi^{N/2}.

Two independent routes to the finite part are provided:

* :func:`eval_regulated` computes <rho^eps G, phi> for eps > 0 by repeated
  integration by parts in r (analytic continuation of the radial Mellin
  transform), without any subtraction;
* :func:`eval_renormalized` subtracts the order-kappa Taylor polynomial of phi
  inside {rho <= 1} and adds the finite boundary terms of the lower Taylor
  orders, which is what the eps-pole subtraction leaves behind.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import special

# -- polynomials -----------------------------------------------------------------


class Polynomial:
    """Sparse real polynomial in N variables: {exponent tuple: coefficient}."""

    def __init__(self, terms: Mapping[tuple[int, ...], float], dimension: int | None = None):
        clean = {}
        for alpha, c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0.0) + float(c)
        if dimension is None:
            if not clean:
                raise ValueError("dimension is needed for the zero polynomial")
            dimension = len(next(iter(clean)))
        if any(len(a) != dimension for a in clean):
            raise ValueError("all exponents must have the same length")
        self.dimension = dimension
        self.terms = {a: c for a, c in clean.items() if c != 0}

    @classmethod
    def constant(cls, value: float, dimension: int) -> "Polynomial":
        return cls({(0,) * dimension: value}, dimension)

    @classmethod
    def monomial(cls, alpha: Sequence[int], coeff: float = 1.0) -> "Polynomial":
        return cls({tuple(alpha): coeff}, len(alpha))

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(a) for a in self.terms}) <= 1

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out: dict[tuple[int, ...], float] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0.0) + ca * cb
        return Polynomial(out, self.dimension)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        total = np.zeros(len(x))
        for a, c in self.terms.items():
            total += c * np.prod(x ** np.asarray(a), axis=1)
        return total

    def scaled_argument(self, lam: float) -> "Polynomial":
        """x -> p(x / lam)."""
        return Polynomial({a: c * lam ** (-sum(a)) for a, c in self.terms.items()}, self.dimension)

    def along_rays(self, omega: np.ndarray) -> np.ndarray:
        """Coefficients in r of p(r w), shape (len(omega), degree + 1)."""
        out = np.zeros((len(omega), self.degree + 1))
        for a, c in self.terms.items():
            out[:, sum(a)] += c * np.prod(omega ** np.asarray(a), axis=1)
        return out

    def __repr__(self):
        return f"Polynomial({self.terms!r})"


# -- amplitudes, seminorms, test functions ---------------------------------------


@dataclass(frozen=True)
class HomogeneousAmplitude:
    """A function on R^N minus the origin, homogeneous of the given degree."""

    dimension: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    degree: float
    name: str = ""

    @property
    def kappa(self) -> float:
        """Superficial degree of divergence, -degree - N."""
        return -self.degree - self.dimension

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.atleast_2d(np.asarray(x, dtype=float)))

    def times(self, p: Polynomial) -> "HomogeneousAmplitude":
        if not p.is_homogeneous:
            raise ValueError("multiplier must be a homogeneous polynomial")
        if p.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        f = self.evaluator
        return HomogeneousAmplitude(
            self.dimension, lambda x: p(x) * f(x), self.degree + p.degree, f"({p})*{self.name}"
        )


def power_amplitude(dimension: int, ell: float) -> HomogeneousAmplitude:
    """1/(x^2)^ell, the density G_ell (degree -2 ell)."""

    def g(x):
        return np.einsum("ij,ij->i", x, x) ** (-ell)

    return HomogeneousAmplitude(dimension, g, -2.0 * ell, f"1/x^{2 * ell:g}")


def monomial_amplitude(alpha: Sequence[int], ell: float) -> HomogeneousAmplitude:
    """x^alpha/(x^2)^ell."""
    p = Polynomial.monomial(alpha)
    return power_amplitude(len(alpha), ell).times(p)


@dataclass(frozen=True)
class Seminorm:
    """Positive-homogeneous degree-one function used as regulator."""

    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = "euclidean"

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.atleast_2d(np.asarray(x, dtype=float)))


EUCLIDEAN = Seminorm(lambda x: np.sqrt(np.einsum("ij,ij->i", x, x)), "euclidean")


def lp_norm(p: float) -> Seminorm:
    """(sum |x_i|^p)^(1/p); for even p a smoothed max-norm."""
    return Seminorm(lambda x: np.sum(np.abs(x) ** p, axis=1) ** (1.0 / p), f"l{p:g}")


def weighted_norm(weights: Sequence[float]) -> Seminorm:
    w = np.asarray(weights, dtype=float)
    return Seminorm(lambda x: np.sqrt(np.einsum("ij,j,ij->i", x, w, x)), f"weighted{list(w)}")


@dataclass(frozen=True)
class TestFunction:
    """phi(x) = p(x) exp(-a |x - c|^2)."""

    __test__ = False  # not a pytest class

    poly: Polynomial
    center: tuple[float, ...]
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != self.poly.dimension:
            raise ValueError("center and polynomial live in different dimensions")
        if not self.width > 0:
            raise ValueError("width must be positive")

    @classmethod
    def gaussian(cls, dimension: int, center=None, width: float = 1.0, coeff: float = 1.0):
        center = (0.0,) * dimension if center is None else center
        return cls(Polynomial.constant(coeff, dimension), tuple(center), width)

    @property
    def dimension(self) -> int:
        return self.poly.dimension

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - np.asarray(self.center)
        return self.poly(x) * np.exp(-self.width * np.einsum("ij,ij->i", d, d))

    def times(self, p: Polynomial) -> "TestFunction":
        return TestFunction(self.poly * p, self.center, self.width)

    def dilated(self, lam: float) -> "TestFunction":
        """x -> phi(x / lam)."""
        c = tuple(lam * x for x in self.center)
        return TestFunction(self.poly.scaled_argument(lam), c, self.width / lam**2)

    def derivatives_at_zero(self, order: int) -> dict[tuple[int, ...], float]:
        """{alpha: d^alpha phi(0)} for all |alpha| <= order."""
        n = self.dimension
        a = self.width
        c = np.asarray(self.center)
        # exp(-a|x-c|^2) = exp(-a|c|^2) prod_i exp(2 a c_i x_i - a x_i^2)
        factors = [_exp_quadratic_taylor(2 * a * ci, a, order) for ci in c]
        gauss = {}
        for alpha in _multi_indices(n, order):
            gauss[alpha] = math.exp(-a * float(c @ c)) * math.prod(
                factors[i][k] for i, k in enumerate(alpha)
            )
        coeffs: dict[tuple[int, ...], float] = {}
        for beta, pb in self.poly.terms.items():
            for alpha, ga in gauss.items():
                key = tuple(x + y for x, y in zip(alpha, beta))
                if sum(key) <= order:
                    coeffs[key] = coeffs.get(key, 0.0) + pb * ga
        return {
            alpha: coeffs.get(alpha, 0.0) * math.prod(math.factorial(k) for k in alpha)
            for alpha in _multi_indices(n, order)
        }


def _exp_quadratic_taylor(b: float, a: float, order: int) -> list[float]:
    # Taylor coefficients of exp(b t - a t^2): (k+1) h_{k+1} = b h_k - 2 a h_{k-1}
    h = [1.0]
    for k in range(order):
        prev = h[k - 1] if k >= 1 else 0.0
        h.append((b * h[k] - 2 * a * prev) / (k + 1))
    return h


def _multi_indices(n: int, order: int, exact: bool = False):
    for alpha in itertools.product(range(order + 1), repeat=n):
        s = sum(alpha)
        if (s == order) if exact else (s <= order):
            yield alpha


# -- quadrature on spheres and rays ------------------------------------------------


@dataclass(frozen=True)
class AngularRule:
    nodes: np.ndarray  # (K, N) unit vectors
    weights: np.ndarray  # (K,), summing to the area of S^{N-1}
    angles: np.ndarray | None = None  # hyperspherical angles, product rules only
    exact: bool = True


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def hyperspherical_point(angles: np.ndarray) -> np.ndarray:
    """Map (psi_1, ..., psi_{N-2}, phi) to a point on S^{N-1}."""
    angles = np.atleast_2d(angles)
    k, m = angles.shape
    out = np.ones((k, m + 1))
    sin_prod = np.ones(k)
    for j in range(m - 1):
        out[:, j] = sin_prod * np.cos(angles[:, j])
        sin_prod = sin_prod * np.sin(angles[:, j])
    out[:, m - 1] = sin_prod * np.cos(angles[:, m - 1])
    out[:, m] = sin_prod * np.sin(angles[:, m - 1])
    return out


@lru_cache(maxsize=32)
def angular_rule(n: int, order: int = 32, seed: int = 0) -> AngularRule:
    """Product Gauss rule on S^{n-1} for n <= 6, random directions otherwise."""
    if n == 1:
        return AngularRule(np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]), None)
    if n > 6:
        rng = np.random.default_rng(seed)
        count = max(order**3, 20000)
        v = rng.standard_normal((count, n))
        v /= np.linalg.norm(v, axis=1)[:, None]
        return AngularRule(v, np.full(count, sphere_area(n) / count), None, exact=False)
    # polar angles psi_j with measure sin^(n-2-j) psi_j, then a periodic phi
    grids, wgrids = [], []
    for j in range(n - 2):
        m = n - 2 - j
        t, w = special.roots_gegenbauer(order, m / 2.0) if m != 1 else special.roots_legendre(order)
        grids.append(np.arccos(t))
        wgrids.append(w)
    nphi = 2 * order
    grids.append(2 * math.pi * (np.arange(nphi) + 0.5) / nphi)
    wgrids.append(np.full(nphi, 2 * math.pi / nphi))
    mesh = np.meshgrid(*grids, indexing="ij")
    wmesh = np.meshgrid(*wgrids, indexing="ij")
    angles = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    return AngularRule(hyperspherical_point(angles), weights, angles)


@lru_cache(maxsize=64)
def _gauss_jacobi(n: int, beta: float):
    # nodes/weights on [0, 1] for weight t^beta
    t, w = special.roots_jacobi(n, 0.0, beta)
    return 0.5 * (t + 1.0), w * 0.5 ** (beta + 1.0)


@lru_cache(maxsize=8)
def _gauss_legendre01(n: int):
    t, w = special.roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _poly_eval(coeffs: np.ndarray, r: np.ndarray) -> np.ndarray:
    """coeffs (K, d+1) ascending, r (K, M) -> (K, M)."""
    out = np.zeros_like(r)
    for j in range(coeffs.shape[1] - 1, -1, -1):
        out = out * r + coeffs[:, j : j + 1]
    return out


class _RayFamily:
    """phi(r w) = P(r) exp(Q(r)) for every node w of an angular rule."""

    def __init__(self, phi: TestFunction, omega: np.ndarray):
        a = phi.width
        c = np.asarray(phi.center)
        self.omega = omega
        self.P = phi.poly.along_rays(omega)
        # Q(r) = -a r^2 + b r + q0
        self.a = a
        self.b = 2.0 * a * (omega @ c)
        self.q0 = -a * float(c @ c)
        self.reach = float(np.linalg.norm(c)) + math.sqrt(46.0 / a)

    def value(self, r: np.ndarray, deriv: int = 0) -> np.ndarray:
        P = self.P
        for _ in range(deriv):
            # (P e^Q)' = (P' + P Q') e^Q, Q' = b - 2 a r
            k, d = P.shape
            new = np.zeros((k, d + 1))
            new[:, : d - 1] += P[:, 1:] * np.arange(1, d)
            new[:, :d] += P * self.b[:, None]
            new[:, 1 : d + 1] += -2.0 * self.a * P
            P = new
        q = self.q0 + self.b[:, None] * r - self.a * r * r
        return _poly_eval(P, r) * np.exp(q)

    def taylor(self, order: int) -> np.ndarray:
        """Taylor coefficients f_j = f^(j)(0)/j!, shape (K, order + 1)."""
        k = len(self.omega)
        h = np.zeros((k, order + 1))
        h[:, 0] = 1.0
        for j in range(order):
            prev = h[:, j - 1] if j >= 1 else 0.0
            h[:, j + 1] = (self.b * h[:, j] - 2.0 * self.a * prev) / (j + 1)
        out = np.zeros((k, order + 1))
        for i in range(min(self.P.shape[1], order + 1)):
            out[:, i:] += self.P[:, i : i + 1] * h[:, : order + 1 - i]
        return out * math.exp(self.q0)


@dataclass
class Quadrature:
    """Resolution knobs shared by the integrals below."""

    angular: int = 32
    radial: int = 64
    split: float = 1.0


DEFAULT_QUAD = Quadrature()


def _radial_power_integral(fam: _RayFamily, beta: float, deriv: int, quad: Quadrature):
    """int_0^inf r^beta f^(deriv)(r) dr for every ray (beta > -1)."""
    if not beta > -1:
        raise ValueError("radial integral diverges at the origin")
    t, w = _gauss_jacobi(quad.radial, float(beta))
    r0 = quad.split
    r = np.broadcast_to(r0 * t, (len(fam.omega), len(t)))
    inner = fam.value(r, deriv) @ (w * r0 ** (beta + 1.0))
    hi = max(fam.reach, r0 * 1.5)
    tl, wl = _gauss_legendre01(quad.radial)
    r = r0 + (hi - r0) * tl
    rr = np.broadcast_to(r, (len(fam.omega), len(tl)))
    outer = (fam.value(rr, deriv) * r**beta) @ (wl * (hi - r0))
    return inner + outer


def _check_dims(G: HomogeneousAmplitude, phi: TestFunction):
    if G.dimension != phi.dimension:
        raise ValueError("amplitude and test function live in different dimensions")


def _rule(G: HomogeneousAmplitude, quad: Quadrature) -> AngularRule:
    return angular_rule(G.dimension, quad.angular)


def _norm(n: int) -> float:
    return math.pi ** (n / 2)


# -- residues -------------------------------------------------------------------------


def numeric_res(
    G: HomogeneousAmplitude, rho: Seminorm = EUCLIDEAN, quad: Quadrature = DEFAULT_QUAD
) -> float:
    """res G = pi^{-N/2} times the integral of G times the Leray form over {rho = 1}.

    The surface {rho = 1} is parametrised by hyperspherical angles through
    x = w / rho(w); the pulled-back form is det[x, dx/dtheta_1, ...] which is
    evaluated with central differences of the parametrisation.
    """
    if abs(G.kappa) > 1e-12:
        raise ValueError(f"numeric_res needs kappa = 0, got {G.kappa}")
    rule = _rule(G, quad)
    n = G.dimension
    if n == 1 or rule.angles is None or rho is EUCLIDEAN:
        if rho is EUCLIDEAN:
            return float(G(rule.nodes) @ rule.weights) / _norm(n)
        x = rule.nodes / rho(rule.nodes)[:, None]
        return float((G(x) / rho(rule.nodes) ** n) @ rule.weights) / _norm(n)
    return float(_leray_integral(G, rho, rule)) / _norm(n)


def _leray_integral(G: HomogeneousAmplitude, rho: Seminorm, rule: AngularRule) -> float:
    theta = rule.angles
    n = G.dimension

    def surface(th):
        w = hyperspherical_point(th)
        return w / rho(w)[:, None]

    x = surface(theta)
    h = 1e-6
    cols = [x]
    for j in range(theta.shape[1]):
        step = np.zeros(theta.shape[1])
        step[j] = h
        cols.append((surface(theta + step) - surface(theta - step)) / (2 * h))
    jac = np.linalg.det(np.stack(cols, axis=2))
    # the rule's weights already contain the sphere's own volume element
    w = hyperspherical_point(theta)
    cols_s = [w]
    for j in range(theta.shape[1]):
        step = np.zeros(theta.shape[1])
        step[j] = h
        cols_s.append((hyperspherical_point(theta + step) - hyperspherical_point(theta - step)) / (2 * h))
    area = np.linalg.det(np.stack(cols_s, axis=2))
    return np.sum(G(x) * (jac / area) * rule.weights)


@dataclass(frozen=True)
class ResidueData:
    """Res G = sum_alpha c_alpha d^alpha delta."""

    kappa: int
    coefficients: dict[tuple[int, ...], float]

    @property
    def scalar(self) -> float:
        if self.kappa != 0:
            raise ValueError("only kappa = 0 residues are a single number")
        return next(iter(self.coefficients.values()), 0.0)

    def pair(self, phi: TestFunction) -> float:
        """<Res G, phi> = sum c_alpha (-1)^|alpha| d^alpha phi(0)."""
        if not self.coefficients:
            return 0.0
        d = phi.derivatives_at_zero(self.kappa)
        return sum(c * (-1) ** sum(a) * d[a] for a, c in self.coefficients.items())

    def __add__(self, other: "ResidueData") -> "ResidueData":
        if self.coefficients and other.coefficients and self.kappa != other.kappa:
            raise ValueError("cannot add residues of different order")
        out = dict(self.coefficients)
        for a, c in other.coefficients.items():
            out[a] = out.get(a, 0.0) + c
        kappa = self.kappa if self.coefficients else other.kappa
        return ResidueData(kappa, out)

    def scale(self, s: float) -> "ResidueData":
        return ResidueData(self.kappa, {a: s * c for a, c in self.coefficients.items()})


def residue_distribution(
    G: HomogeneousAmplitude, kappa: int | None = None, quad: Quadrature = DEFAULT_QUAD
) -> ResidueData:
    """Reduce to kappa = 0: c_alpha = (-1)^kappa res(x^alpha G)/alpha!."""
    k = G.kappa if kappa is None else kappa
    if abs(G.kappa - k) > 1e-12 or k < 0 or k != int(k):
        raise ValueError(f"degree {G.degree} does not match kappa = {k} in dimension {G.dimension}")
    k = int(k)
    coeffs = {}
    for alpha in _multi_indices(G.dimension, k, exact=True):
        r = numeric_res(G.times(Polynomial.monomial(alpha)), quad=quad)
        fact = math.prod(math.factorial(a) for a in alpha)
        coeffs[alpha] = (-1) ** k * r / fact
    return ResidueData(k, coeffs)


# -- regulated and renormalized pairings -------------------------------------------


def eval_regulated(
    G: HomogeneousAmplitude,
    rho: Seminorm,
    eps: float,
    phi: TestFunction,
    quad: Quadrature = DEFAULT_QUAD,
) -> float:
    """<rho^eps G, phi> with measure d^N x/pi^{N/2}, analytically continued in eps.

    Radially this is int r^(s-1) f(r) dr with s = eps - kappa.  When s <= 0 it
    is continued by m integrations by parts,
    (-1)^m / (s (s+1) ... (s+m-1)) int r^(s+m-1) f^(m)(r) dr.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check_dims(G, phi)
    rule = _rule(G, quad)
    fam = _RayFamily(phi, rule.nodes)
    s = eps - G.kappa
    m = 0 if s > 0 else int(math.floor(-s)) + 1
    if any(abs(s + j) < 1e-12 for j in range(m)):
        raise ValueError(f"eps = {eps} hits a pole of the continuation")
    pref = (-1) ** m / math.prod(s + j for j in range(m)) if m else 1.0
    radial = pref * _radial_power_integral(fam, s + m - 1, m, quad)
    angular = G(rule.nodes) * rho(rule.nodes) ** eps
    return float((angular * radial) @ rule.weights) / _norm(G.dimension)


def pole_coefficient(G: HomogeneousAmplitude, phi: TestFunction, quad: Quadrature = DEFAULT_QUAD) -> float:
    """<Res G, phi>, computed from the residue distribution."""
    k = G.kappa
    if k < 0:
        return 0.0
    return residue_distribution(G, quad=quad).pair(phi)


def eval_renormalized(
    G: HomogeneousAmplitude,
    rho: Seminorm,
    phi: TestFunction,
    quad: Quadrature = DEFAULT_QUAD,
) -> float:
    """<G^rho, phi>: the eps^0 term of <rho^eps G, phi>.

    Inside {rho <= 1} the order-kappa Taylor polynomial of phi is subtracted;
    the Taylor orders j < kappa leave the finite boundary terms
    f_j rho(w)^(kappa-j)/(j - kappa).  For convergent G this is the plain
    integral.
    """
    _check_dims(G, phi)
    k = G.kappa
    rule = _rule(G, quad)
    fam = _RayFamily(phi, rule.nodes)
    g = G(rule.nodes)
    if k < 0:
        radial = _radial_power_integral(fam, -k - 1, 0, quad)
        return float((g * radial) @ rule.weights) / _norm(G.dimension)
    if k != int(k):
        raise ValueError("non-integer divergence degree is not supported")
    k = int(k)
    rho_w = rho(rule.nodes)
    edge = 1.0 / rho_w  # {rho <= 1} along the ray w is r <= 1/rho(w)
    series_order = k + 40
    taylor = fam.taylor(series_order)

    tl, wl = _gauss_legendre01(quad.radial)
    # inside: r^(-k-1) (f - T_k f), by series for small r to dodge cancellation
    r_in = edge[:, None] * tl[None, :]
    direct = (fam.value(r_in) - _poly_eval(taylor[:, : k + 1], r_in)) / r_in ** (k + 1)
    tail = _poly_eval(taylor[:, k + 1 :], r_in)
    # the series converges fast while |b| r + a r^2 stays O(1)
    small = (np.abs(fam.b)[:, None] * r_in + fam.a * r_in**2) < 2.0
    integrand = np.where(small, tail, direct)
    inside = (integrand @ wl) * edge

    hi = np.maximum(fam.reach, 1.5 * edge)
    r_out = edge[:, None] + (hi - edge)[:, None] * tl[None, :]
    outside = (fam.value(r_out) * r_out ** (-k - 1.0)) @ wl * (hi - edge)

    boundary = np.zeros(len(rule.nodes))
    for j in range(k):
        boundary += taylor[:, j] * rho_w ** (k - j) / (j - k)
    total = (g * (inside + outside + boundary)) @ rule.weights
    return float(total) / _norm(G.dimension)


def richardson(eps: Sequence[float], values: Sequence[float]) -> float:
    """Polynomial (Neville) extrapolation of values(eps) to eps = 0."""
    x = list(map(float, eps))
    p = list(map(float, values))
    n = len(x)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = (x[i] * p[i + 1] - x[i + level] * p[i]) / (x[i] - x[i + level])
    return p[0]


# six halvings: with four the O(eps^4) remainder is still ~1e-6 relative
EPS_GRID = (0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625)


def pole_subtracted_limit(
    G: HomogeneousAmplitude,
    rho: Seminorm,
    phi: TestFunction,
    eps_grid: Sequence[float] = EPS_GRID,
    quad: Quadrature = DEFAULT_QUAD,
) -> float:
    """lim_{eps->0} (<rho^eps G, phi> - <Res G, phi>/eps) by Richardson extrapolation."""
    pole = pole_coefficient(G, phi, quad)
    vals = [eval_regulated(G, rho, e, phi, quad) - pole / e for e in eps_grid]
    return richardson(eps_grid, vals)


def pole_strength(
    G: HomogeneousAmplitude,
    rho: Seminorm,
    phi: TestFunction,
    eps_grid: Sequence[float] = EPS_GRID,
    quad: Quadrature = DEFAULT_QUAD,
) -> float:
    """lim eps <rho^eps G, phi>, i.e. the 1/eps coefficient, by extrapolation."""
    vals = [e * eval_regulated(G, rho, e, phi, quad) for e in eps_grid]
    return richardson(eps_grid, vals)


# -- scaling --------------------------------------------------------------------------


def dilation_defect(
    G: HomogeneousAmplitude,
    rho: Seminorm,
    phi: TestFunction,
    lam: float,
    quad: Quadrature = DEFAULT_QUAD,
    base: float | None = None,
) -> float:
    """d(lam) = <lam^(-degree) G^rho(lam x) - G^rho(x), phi>.

    By the change of variables x -> x/lam this is
    lam^kappa <G^rho, phi(./lam)> - <G^rho, phi>.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if base is None:
        base = eval_renormalized(G, rho, phi, quad)
    if lam == 1.0:
        return 0.0
    return lam**G.kappa * eval_renormalized(G, rho, phi.dilated(lam), quad) - base


@dataclass(frozen=True)
class ScalingFit:
    coefficients: tuple[float, ...]  # c_0, c_1, ..., c_order
    residual: float
    defects: tuple[float, ...]

    def __getitem__(self, j: int) -> float:
        return self.coefficients[j]


def scaling_defect(
    G: HomogeneousAmplitude,
    phi: TestFunction,
    lambda_grid: Sequence[float],
    rho: Seminorm = EUCLIDEAN,
    order: int = 2,
    quad: Quadrature = DEFAULT_QUAD,
) -> ScalingFit:
    """Fit d(lam) = c_0 + sum_{j=1..order} c_j (log lam)^j / j!.

    c_0 should vanish (the extension keeps the degree); c_j approximates
    <R_j(G), phi>.
    """
    lams = np.asarray(sorted(set(float(x) for x in lambda_grid)))
    if len(lams) < order + 2 or np.any(lams <= 0):
        raise ValueError(f"need at least {order + 2} distinct positive scalings")
    base = eval_renormalized(G, rho, phi, quad)
    d = np.array([dilation_defect(G, rho, phi, lam, quad, base) for lam in lams])
    L = np.log(lams)
    A = np.stack([L**j / math.factorial(j) for j in range(order + 1)], axis=1)
    if np.linalg.cond(A) > 1e10:
        raise ValueError("scaling fit is ill-conditioned; spread the lambda grid")
    coef, *_ = np.linalg.lstsq(A, d, rcond=None)
    resid = float(np.max(np.abs(A @ coef - d))) if len(d) else 0.0
    return ScalingFit(tuple(float(c) for c in coef), resid, tuple(float(x) for x in d))


# -- Euler operator on log-homogeneous sums ----------------------------------------


@dataclass(frozen=True)
class LogTerm:
    """coeff * h(x) * (log rho(x))^power with h homogeneous."""

    amplitude: HomogeneousAmplitude
    power: int = 0
    coeff: float = 1.0


def apply_euler_shift(terms: Iterable[LogTerm]) -> list[LogTerm]:
    """(E + N) applied termwise: (deg h + N) h L^k + k h L^(k-1), E log rho = 1."""
    out = []
    for t in terms:
        if not isinstance(t, LogTerm) or t.power < 0 or t.power != int(t.power):
            raise ValueError("terms must be LogTerm with non-negative integer power")
        h = t.amplitude
        w = h.degree + h.dimension
        if w != 0:
            out.append(LogTerm(h, t.power, t.coeff * w))
        if t.power > 0:
            out.append(LogTerm(h, t.power - 1, t.coeff * t.power))
    return out


def euler_residue(terms: Sequence[LogTerm], j: int, quad: Quadrature = DEFAULT_QUAD) -> ResidueData:
    """R_j = Res[(E + N)^(j-1) G] for G a finite sum of log-homogeneous terms.

    Terms carrying a positive power of log rho have no simple pole (their
    pole is of higher order), so only log-free terms with kappa >= 0
    contribute.
    """
    if j < 1:
        raise ValueError("j starts at 1")
    terms = list(terms)
    if not terms:
        raise ValueError("empty representation")
    for _ in range(j - 1):
        terms = apply_euler_shift(terms)
    if not terms:
        return ResidueData(0, {})
    apply_euler_shift(terms)  # validates the representation
    total = ResidueData(0, {})
    for t in terms:
        if t.power == 0 and t.amplitude.kappa >= 0:
            total = total + residue_distribution(t.amplitude, quad=quad).scale(t.coeff)
    return total


# -- multiplier commutation -----------------------------------------------------------


def check_multiplier_commutation(
    G: HomogeneousAmplitude,
    p: Polynomial,
    phi: TestFunction,
    rho: Seminorm = EUCLIDEAN,
    quad: Quadrature = DEFAULT_QUAD,
) -> float:
    """<(p G)^rho, phi> - <G^rho, p phi>."""
    if not p.is_homogeneous:
        raise ValueError("p must be homogeneous")
    if G.kappa >= 0 and p.degree > G.kappa:
        raise ValueError("multiplier degree exceeds the divergence degree")
    if len(p.terms) == 1 and p.degree == 0 and next(iter(p.terms.values())) == 1.0:
        return 0.0
    lhs = eval_renormalized(G.times(p), rho, phi, quad)
    rhs = eval_renormalized(G, rho, phi.times(p), quad)
    return lhs - rhs

"""Gauge-fixed Monte Carlo evaluation of graph periods.

Pick three vertices of a completed graph and send them to infinity, the origin
and the unit vector e = (1, 0, 0, 0).  Propagators to infinity drop out and
the period is the integral of the remaining product of 1/x_ij^2 over the other
vertices, each with measure d^4x/pi^2.

Sampling: every free vertex is drawn from an equal-weight mixture of radial
densities centred on the anchors (fixed points plus the free vertices drawn
before it),

    q_a(x) = s^(4-2p) / (pi^2 B(2-p, 2-p) |x-a|^(2p) (|x-a|^2 + s^2)^(4-2p)),

which behaves like |x-a|^(-2p) at the anchor and like |x|^-8 at infinity.
p = 1 is a single propagator.  The default p = 1.5 over-covers the anchors:
with p = 1 the weight has infinite variance when several free vertices
collapse onto one point at once (the collapse of k vertices spanning e edges
is square integrable only for e < (p + 2) k / 2).
Randomness is counter based: chunk k of 2**16 samples uses the stream
Philox(SeedSequence(seed, spawn_key=(k,))), and chunk sums are added in chunk
order, so results do not depend on how many workers ran the chunks.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .box_reduce import one_loop_box
from .graph_core import CompletedGraph

log = logging.getLogger(__name__)

CHUNK = 1 << 16
MOM_BLOCKS = 32
E_UNIT = (1.0, 0.0, 0.0, 0.0)
ORIGIN = (0.0, 0.0, 0.0, 0.0)


class IntegrationError(RuntimeError):
    """The sampled weights were not finite."""


@dataclass(frozen=True)
class GaugeChoice:
    v_inf: int
    v_zero: int
    v_one: int

    def __post_init__(self):
        if len({self.v_inf, self.v_zero, self.v_one}) != 3:
            raise ValueError("gauge vertices must be pairwise distinct")

    def as_list(self) -> list[int]:
        return [self.v_inf, self.v_zero, self.v_one]


@dataclass(frozen=True)
class Integrand:
    """Product of propagators and closed-form boxes over free 4-vectors.

    ``factors`` holds one (i, j) pair per propagator 1/x_ij^2, repeated for
    parallel edges.  ``boxes`` holds (vertex, (n1, n2, n3, n4)) for every
    vertex integrated out analytically.
    """

    fixed: tuple[tuple[int, tuple[float, ...]], ...]
    free: tuple[int, ...]
    factors: tuple[tuple[int, int], ...]
    boxes: tuple[tuple[int, tuple[int, int, int, int]], ...] = ()
    constant: float = 1.0
    gauge: GaugeChoice | None = None

    @property
    def dimension(self) -> int:
        return 4 * len(self.free)

    def scaled(self, c: float) -> "Integrand":
        return replace(self, constant=self.constant * c)

    def evaluate(self, positions: dict[int, np.ndarray]) -> np.ndarray:
        """Integrand values; ``positions`` maps every vertex to an (M, 4) array."""
        value = None
        for i, j in self.factors:
            d = positions[i] - positions[j]
            term = 1.0 / np.einsum("...k,...k->...", d, d)
            value = term if value is None else value * term
        for _, nb in self.boxes:
            term = one_loop_box(*(positions[k] for k in nb))
            value = term if value is None else value * term
        if value is None:
            value = np.ones(len(next(iter(positions.values()))))
        return self.constant * value


@dataclass(frozen=True)
class Strategy:
    scale: float = 1.0
    error: str = "variance"  # or "median-of-means"
    peak: float = 1.5  # anchor density ~ |x-a|^(-2 peak); must lie in (0, 2)

    def __post_init__(self):
        if self.error not in ("variance", "median-of-means"):
            raise ValueError(f"unknown error mode {self.error!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not 0.0 < self.peak < 2.0:
            raise ValueError("peak exponent must lie in (0, 2)")

    def describe(self, ig: Integrand) -> str:
        box = "on" if ig.boxes else "off"
        return f"anchor-mixture;s={self.scale:g};peak={self.peak:g};boxes={len(ig.boxes)}({box});error={self.error}"


@dataclass(frozen=True)
class PeriodEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    gauge: GaugeChoice | None
    strategy: str
    max_weight: float = field(default=0.0, compare=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
            "gauge": self.gauge.as_list() if self.gauge else None,
            "strategy": self.strategy,
        }

    def z_score(self, other: "PeriodEstimate") -> float:
        sigma = math.hypot(self.std_error, other.std_error)
        delta = abs(self.value - other.value)
        return 0.0 if delta == 0 else delta / sigma


def choose_box_vertices(c: CompletedGraph, gauge: GaugeChoice) -> list[tuple[int, tuple]]:
    """Greedy independent set of free vertices whose star is a one-loop box.

    A vertex qualifies when it is not adjacent to infinity (no leg in the
    decompleted graph) and has four distinct neighbours, none of them already
    chosen.
    """
    fixed = set(gauge.as_list())
    chosen: list[tuple[int, tuple]] = []
    taken: set[int] = set()
    for v in range(c.vertex_count):
        if v in fixed:
            continue
        nb = c.neighbors(v)
        if gauge.v_inf in nb or len(nb) != 4 or taken & (set(nb) | {v}):
            continue
        chosen.append((v, tuple(nb)))
        taken.add(v)
        taken.update(nb)
    # a neighbour of a box may itself be free but must not be integrated out
    return chosen


def gauge_fix(c: CompletedGraph, gauge: GaugeChoice, box_reduction: bool = True) -> Integrand:
    """Integrand of the period with the given vertices at infinity, 0 and e."""
    n = c.vertex_count
    for v in gauge.as_list():
        if not 0 <= v < n:
            raise ValueError(f"gauge vertex {v} is not in the graph")
    boxes = choose_box_vertices(c, gauge) if box_reduction else []
    boxed = {v for v, _ in boxes}
    factors = tuple(
        (a, b) for a, b in c.edges if gauge.v_inf not in (a, b) and a not in boxed and b not in boxed
    )
    free = tuple(
        v for v in range(n) if v not in (gauge.v_inf, gauge.v_zero, gauge.v_one) and v not in boxed
    )
    fixed = ((gauge.v_zero, ORIGIN), (gauge.v_one, E_UNIT))
    return Integrand(fixed, free, factors, tuple(boxes), 1.0, gauge)


def box_integrand(points) -> Integrand:
    """The star integral over one free vertex joined to four fixed points."""
    pts = [tuple(float(x) for x in p) for p in points]
    if len(pts) != 4:
        raise ValueError("the box needs exactly four points")
    fixed = tuple((i, p) for i, p in enumerate(pts))
    return Integrand(fixed, (4,), tuple((i, 4) for i in range(4)))


def _uniform_open(rng, size):
    u = rng.random(size)
    # (0, 1): r = 0 would sit on a propagator singularity
    return np.where(u == 0.0, 0.5 / 2**53, u)


def _mixture_density(x: np.ndarray, anchors: list[np.ndarray], s2: float, peak: float) -> np.ndarray:
    # q_a = s^(4-2p) / (pi^2 B(2-p, 2-p) d^(2p) (d^2 + s^2)^(4-2p)), p = peak
    norm = s2 ** (2.0 - peak) / (np.pi**2 * special.beta(2.0 - peak, 2.0 - peak))
    total = np.zeros(len(x))
    for a in anchors:
        d = x - a
        r2 = np.einsum("ij,ij->i", d, d)
        if peak == 1.0:
            total += norm / (r2 * (r2 + s2) ** 2)
        else:
            total += norm / (r2**peak * (r2 + s2) ** (4.0 - 2.0 * peak))
    return total / len(anchors)


def _radii(rng, size: int, scale: float, peak: float) -> np.ndarray:
    # r^2/s^2 is beta-prime(2-p, 2-p); for p = 1 that is u/(1-u) with u uniform
    if peak == 1.0:
        u = _uniform_open(rng, size)
    else:
        u = rng.beta(2.0 - peak, 2.0 - peak, size)
        u = np.clip(u, 0.5 / 2**53, 1.0 - 2.0**-53)
    return scale * np.sqrt(u / (1.0 - u))


def _draw_weights(ig: Integrand, seed: int, index: int, size: int, strategy: Strategy) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
    scale, peak = strategy.scale, strategy.peak
    s2 = scale * scale
    positions: dict[int, np.ndarray] = {}
    anchors: list[np.ndarray] = []
    for v, p in ig.fixed:
        positions[v] = np.broadcast_to(np.asarray(p, dtype=float), (size, 4))
        anchors.append(positions[v])
    log_density = np.zeros(size)
    for v in ig.free:
        pick = rng.integers(0, len(anchors), size)
        direction = rng.standard_normal((size, 4))
        direction /= np.linalg.norm(direction, axis=1)[:, None]
        radius = _radii(rng, size, scale, peak)
        centre = np.choose(pick[:, None], anchors)
        x = centre + radius[:, None] * direction
        # each free vertex carries d^4x/pi^2, hence the pi^2 next to q
        log_density += np.log(np.pi**2 * _mixture_density(x, anchors, s2, peak))
        positions[v] = x
        anchors.append(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return ig.evaluate(positions) * np.exp(-log_density)


def _run_chunk(args):
    ig, seed, index, size, strategy = args
    w = _draw_weights(ig, seed, index, size, strategy)
    bad = int(np.count_nonzero(~np.isfinite(w)))
    if bad:
        return None, bad
    block = (index * CHUNK + np.arange(size)) % MOM_BLOCKS
    return (
        float(np.sum(w)),
        float(np.sum(w * w)),
        np.bincount(block, weights=w, minlength=MOM_BLOCKS),
        np.bincount(block, minlength=MOM_BLOCKS),
        float(np.max(w)),
    ), 0


def _chunks(samples: int):
    full, rest = divmod(samples, CHUNK)
    sizes = [CHUNK] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def mc_estimate(
    ig: Integrand,
    samples: int,
    seed: int = 1,
    strategy: Strategy | None = None,
    workers: int = 1,
) -> PeriodEstimate:
    """Importance-sampled estimate of the integral of ``ig``."""
    strategy = strategy or Strategy()
    if samples < 10_000:
        raise ValueError("use at least 10^4 samples")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    jobs = [(ig, seed, k, size, strategy) for k, size in _chunks(samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(job) for job in jobs]

    total = total_sq = 0.0
    block_sum = np.zeros(MOM_BLOCKS)
    block_n = np.zeros(MOM_BLOCKS)
    wmax = 0.0
    for (k, _), (res, bad) in zip(_chunks(samples), results):
        if res is None:
            raise IntegrationError(
                f"{bad} non-finite weights in chunk {k} (seed {seed}); "
                "the integrand is probably not integrable (is the graph primitive?)"
            )
        s, sq, bs, bn, m = res
        total += s
        total_sq += sq
        block_sum += bs
        block_n += bn
        wmax = max(wmax, m)

    mean = total / samples
    if strategy.error == "variance":
        var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
        value, err = mean, math.sqrt(var / samples)
    else:
        means = block_sum / block_n
        value = float(np.median(means))
        err = math.sqrt(math.pi / 2) * float(np.std(means, ddof=1)) / math.sqrt(MOM_BLOCKS)
    return PeriodEstimate(value, err, samples, seed, ig.gauge, strategy.describe(ig), wmax)


def sample_weights(
    ig: Integrand, samples: int, seed: int = 1, strategy: Strategy | None = None
) -> np.ndarray:
    """Raw importance weights of the first ``samples`` draws (for diagnostics)."""
    strategy = strategy or Strategy()
    return np.concatenate(
        [_draw_weights(ig, seed, k, size, strategy) for k, size in _chunks(samples)]
    )


@dataclass(frozen=True)
class GaugeReport:
    estimates: tuple[PeriodEstimate, ...]
    z_scores: dict[tuple[int, int], float]
    threshold: float = 3.0

    @property
    def passed(self) -> bool:
        return all(z <= self.threshold for z in self.z_scores.values())

    def to_json(self) -> dict:
        return {
            "estimates": [e.to_json() for e in self.estimates],
            "z_scores": [[i, j, z] for (i, j), z in sorted(self.z_scores.items())],
            "pass": self.passed,
        }


def gauge_independence_check(
    c: CompletedGraph,
    gauges,
    samples: int,
    seed: int = 1,
    strategy: Strategy | None = None,
    workers: int = 1,
    box_reduction: bool = True,
) -> GaugeReport:
    """Estimate the period in several gauges; pass iff all pairwise z-scores are <= 3.

    Gauge k uses seed + k: with a shared stream, gauges related by a graph
    automorphism would return bit-identical estimates and the test says nothing.
    """
    gauges = list(gauges)
    if len(gauges) < 2:
        raise ValueError("need at least two gauges")
    est = tuple(
        mc_estimate(gauge_fix(c, g, box_reduction), samples, (seed + k) % 2**64, strategy, workers)
        for k, g in enumerate(gauges)
    )
    z = {(i, j): est[i].z_score(est[j]) for i in range(len(est)) for j in range(i + 1, len(est))}
    return GaugeReport(est, z)


def default_gauges(c: CompletedGraph, count: int = 3) -> list[GaugeChoice]:
    """``count`` gauges with distinct vertices at infinity."""
    n = c.vertex_count
    if count > n:
        raise ValueError(f"only {n} vertices available for infinity")
    out = []
    for k in range(count):
        v_inf = n - 1 - k
        rest = [v for v in range(n) if v != v_inf]
        out.append(GaugeChoice(v_inf, rest[k % len(rest)], rest[(k + 1) % len(rest)]))
    return out


def conformal_invert_config(points) -> np.ndarray:
    """x -> x / x^2 for each point."""
    x = np.asarray(points, dtype=float)
    n2 = np.sum(x * x, axis=-1, keepdims=True)
    if np.any(n2 == 0):
        raise ValueError("cannot invert the origin")
    return x / n2


def hill_tail_index(weights: np.ndarray, tail: int = 1000) -> float:
    """Hill estimator of the tail exponent of the weight distribution.

    Finite variance needs an index above 2; this is a diagnostic only.
    """
    w = np.sort(np.asarray(weights, dtype=float))[::-1]
    tail = min(tail, len(w) - 1)
    top = w[: tail + 1]
    if top[tail] <= 0:
        return math.inf
    return float(tail / np.sum(np.log(top[:tail] / top[tail])))

import math

import numpy as np
import pytest

from periodforge.graph_core import CompletedGraph, complete, complete_graph, wheel
from periodforge.period_mc import (
    CHUNK,
    GaugeChoice,
    IntegrationError,
    Integrand,
    Strategy,
    conformal_invert_config,
    default_gauges,
    gauge_fix,
    gauge_independence_check,
    hill_tail_index,
    mc_estimate,
    sample_weights,
)
from periodforge.special_fn import zeta_value

K5_PERIOD = 6 * zeta_value(3)
W4_PERIOD = 20 * zeta_value(5)


def test_gauge_choice_validation():
    with pytest.raises(ValueError):
        GaugeChoice(1, 1, 2)
    with pytest.raises(ValueError):
        gauge_fix(complete_graph(5), GaugeChoice(0, 1, 7))


def test_k5_gauge_fix_factors():
    # K5 with (inf, 0, e) = (5, 4, 1) in 1-based labels
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    assert ig.free == (1, 2)
    assert ig.dimension == 8
    assert sorted(ig.factors) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert dict(ig.fixed) == {3: (0.0, 0.0, 0.0, 0.0), 0: (1.0, 0.0, 0.0, 0.0)}


def test_wheel4_gauge_fix_box():
    c = complete(wheel(4))  # hub 0, rim 1..4, infinity 5
    ig = gauge_fix(c, GaugeChoice(5, 1, 2))
    assert ig.boxes == ((0, (1, 2, 3, 4)),)
    assert ig.free == (3, 4) and ig.dimension == 8
    # the completion is an octahedron: whatever goes to infinity, its antipode
    # is the reducible vertex as long as it is not pinned to 0 or e
    for v_inf in range(6):
        antipode = next(u for u in range(6) if u != v_inf and u not in c.neighbors(v_inf))
        a, b = c.neighbors(v_inf)[:2]
        ig = gauge_fix(c, GaugeChoice(v_inf, a, b))
        assert [v for v, _ in ig.boxes] == [antipode]
        assert len(ig.free) == 2
    assert gauge_fix(c, GaugeChoice(5, 1, 2), box_reduction=False).boxes == ()
    # bookkeeping: factors + 4 boxes = edges not touching infinity
    for gauge in [GaugeChoice(1, 2, 3), GaugeChoice(5, 1, 2), GaugeChoice(0, 1, 2)]:
        for box in (True, False):
            ig = gauge_fix(c, gauge, box)
            kept = sum(1 for e in c.edges if gauge.v_inf not in e)
            assert len(ig.factors) + 4 * len(ig.boxes) == kept
            assert len(ig.free) + len(ig.boxes) == c.vertex_count - 3


def test_linearity_and_determinism():
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    a = mc_estimate(ig, 50_000, seed=9)
    b = mc_estimate(ig.scaled(3.0), 50_000, seed=9)
    assert b.value == pytest.approx(3 * a.value, rel=1e-14)
    assert mc_estimate(ig, 50_000, seed=9) == a
    assert mc_estimate(ig, 50_000, seed=10) != a


def test_worker_independence():
    ig = gauge_fix(complete(wheel(4)), GaugeChoice(5, 1, 2))
    n = 3 * CHUNK + 123
    ref = mc_estimate(ig, n, seed=5)
    assert mc_estimate(ig, n, seed=5, workers=3) == ref


def test_k5_estimate():
    est = mc_estimate(gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0)), 1_000_000, seed=2)
    assert abs(est.value - K5_PERIOD) < 3.5 * est.std_error
    assert est.std_error / est.value < 0.01


def test_median_of_means():
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    est = mc_estimate(ig, 500_000, seed=3, strategy=Strategy(error="median-of-means"))
    assert abs(est.value - K5_PERIOD) < 4 * est.std_error
    assert "median-of-means" in est.strategy


def test_peak_one_density_is_unbiased_for_k5():
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    est = mc_estimate(ig, 500_000, seed=6, strategy=Strategy(peak=1.0))
    assert abs(est.value - K5_PERIOD) < 4 * est.std_error


def test_weights_positive_and_tail():
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    w = sample_weights(ig, 200_000, seed=1)
    assert np.all(w >= 0) and np.all(np.isfinite(w))
    assert hill_tail_index(w) > 2


def test_non_integrable_is_reported():
    # a self-pairing factor 1/(x - x)^2 is infinite at every sample
    bad = Integrand(((0, (0.0,) * 4),), (2,), ((2, 2),))
    with pytest.raises(IntegrationError):
        mc_estimate(bad, 10_000)


def test_argument_checks():
    ig = gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0))
    with pytest.raises(ValueError):
        mc_estimate(ig, 9_999)
    with pytest.raises(ValueError):
        mc_estimate(ig, 10_000, seed=-1)
    with pytest.raises(ValueError):
        Strategy(peak=2.0)


def test_gauge_check_repeated_gauge_uses_fresh_streams():
    c = complete_graph(5)
    g = GaugeChoice(4, 3, 0)
    rep = gauge_independence_check(c, [g, g], 200_000, seed=1)
    # each gauge draws its own stream, so even a repeated gauge is a real comparison
    assert [e.seed for e in rep.estimates] == [1, 2]
    assert rep.estimates[0].value != rep.estimates[1].value
    assert 0 < rep.z_scores[(0, 1)] and rep.passed
    with pytest.raises(ValueError):
        gauge_independence_check(c, [g], 20_000)


def test_wheel4_rim_vs_hub_infinity():
    c = complete(wheel(4))
    rim = GaugeChoice(5, 1, 2)  # hub is boxed
    hub = GaugeChoice(0, 1, 2)  # no box possible
    rep = gauge_independence_check(c, [rim, hub], 1_000_000, seed=8)
    assert rep.passed, rep.to_json()
    assert rep.estimates[0].strategy.count("boxes=1") == 1
    for e in rep.estimates:
        assert abs(e.value - W4_PERIOD) < 3.5 * e.std_error


def test_default_gauges_distinct_infinity():
    gs = default_gauges(complete_graph(5), 3)
    assert len({g.v_inf for g in gs}) == 3


def test_conformal_inversion():
    e = np.array([1.0, 0, 0, 0])
    assert np.allclose(conformal_invert_config([e]), [e])
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(100, 4))
    assert np.allclose(conformal_invert_config(conformal_invert_config(pts)), pts, rtol=1e-14)
    inv = conformal_invert_config(pts)
    xi, xj = pts[:50], pts[50:]
    lhs = np.sum((inv[:50] - inv[50:]) ** 2, axis=1) * np.sum(xi**2, axis=1) * np.sum(xj**2, axis=1)
    assert np.allclose(lhs, np.sum((xi - xj) ** 2, axis=1), rtol=1e-12)
    with pytest.raises(ValueError):
        conformal_invert_config([[0.0, 0, 0, 0]])


def test_estimate_json():
    est = mc_estimate(gauge_fix(complete_graph(5), GaugeChoice(4, 3, 0)), 10_000, seed=1)
    d = est.to_json()
    assert set(d) == {"value", "std_error", "samples", "seed", "gauge", "strategy"}
    assert d["gauge"] == [4, 3, 0] and d["samples"] == 10_000

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from periodforge.box_reduce import one_loop_box, sqdist
from periodforge.conformal_anomaly import (
    cocycle_check,
    compose_res2,
    cross_ratio_defect,
    dilation_anomaly_4pt,
    g4_amplitude,
    group_law_defect,
    nested_amplitude,
    omega,
    propagator_covariance_check,
    special_conformal,
    via_inversions,
)
from periodforge.period_mc import conformal_invert_config
from periodforge.periods_db import ONE, SymbolicPeriod, wheel_period
from periodforge.special_fn import zeta_value

vec4 = st.lists(st.floats(-2, 2), min_size=4, max_size=4).map(np.array)


def test_omega_trivial_cases():
    x = np.array([0.3, -1.0, 2.0, 0.5])
    assert omega(np.zeros(4), x) == 1.0
    assert omega(x, np.zeros(4)) == 1.0
    assert np.array_equal(special_conformal(np.zeros(4), x), x)
    assert np.array_equal(special_conformal(x, np.zeros(4)), np.zeros(4))


def test_omega_inverse_pair():
    rng = np.random.default_rng(0)
    c, x = rng.normal(size=(500, 4)) * 0.4, rng.normal(size=(500, 4))
    ok = np.abs(omega(c, x)) > 0.05
    c, x = c[ok], x[ok]
    prod = omega(c, x) * omega(-c, special_conformal(c, x))
    assert np.allclose(prod, 1.0, rtol=0, atol=1e-12)


def test_singular_point_raises():
    c = np.array([1.0, 0, 0, 0])
    with pytest.raises(ZeroDivisionError):
        special_conformal(c, -c)


@given(vec4, vec4, vec4)
def test_group_law_and_cocycle(c1, c2, x):
    c1, c2 = 0.5 * c1, 0.5 * c2
    assume(abs(omega(c1, x)) > 0.05 and abs(omega(c1 + c2, x)) > 0.05)
    assume(abs(omega(c2, special_conformal(c1, x))) > 0.05)
    assert group_law_defect(c1, c2, x) < 1e-10
    assert cocycle_check(c1, c2, x) < 1e-12
    assert cocycle_check(c1, np.zeros(4), x) == 0.0


@given(vec4, vec4, vec4)
def test_propagator_covariance(c, x, y):
    assume(np.sum((x - y) ** 2) > 1e-3)
    assume(abs(omega(c, x)) > 0.05 and abs(omega(c, y)) > 0.05)
    assert propagator_covariance_check(c, x, y) < 1e-12
    assert propagator_covariance_check(np.zeros(4), x, y) == 0.0


def test_g_c_is_inversion_translation_inversion():
    rng = np.random.default_rng(1)
    c, x = rng.normal(size=(200, 4)) * 0.3, rng.normal(size=(200, 4))
    assert np.allclose(special_conformal(c, x), via_inversions(c, x), rtol=1e-10, atol=1e-12)
    # pure inversion law: the propagator picks up x_i^2 x_j^2
    y = rng.normal(size=(200, 4))
    lhs = sqdist(conformal_invert_config(x), conformal_invert_config(y))
    assert np.allclose(lhs * np.sum(x * x, 1) * np.sum(y * y, 1), sqdist(x, y), rtol=1e-12)


def test_cross_ratios_invariant():
    rng = np.random.default_rng(2)
    pts = [rng.normal(size=(1000, 4)) for _ in range(4)]
    c = rng.normal(size=(1000, 4)) * 0.2
    assert cross_ratio_defect(c, pts).max() < 1e-10


def test_box_covariance():
    # prefactor 1/(x13^2 x24^2) carries the weights, Phi(u, v) is invariant:
    # box(g x) = box(x) prod_i omega(c, x_i)
    rng = np.random.default_rng(3)
    for _ in range(50):
        pts = rng.normal(size=(4, 4))
        c = rng.normal(size=4) * 0.3
        if min(abs(omega(c, p)) for p in pts) < 0.05:
            continue
        moved = [special_conformal(c, p) for p in pts]
        w = np.prod([omega(c, p) for p in pts])
        assert one_loop_box(*moved) == pytest.approx(one_loop_box(*pts) * w, rel=1e-9)


def test_g4_homogeneity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        cfg = list(rng.normal(size=(4, 4)))
        lam = math.exp(rng.uniform(-2, 2))
        lhs, rhs = dilation_anomaly_4pt(g4_amplitude, cfg, lam)
        assert abs(lhs) <= 1e-10 * abs(g4_amplitude(*cfg)) and rhs == 0.0


def test_order_one_dilation_law():
    rng = np.random.default_rng(5)
    res_s = 6 * zeta_value(3)
    for lam in (0.3, 2.0, 7.5):
        cfg = list(rng.normal(size=(4, 4)))
        lhs, rhs = dilation_anomaly_4pt(nested_amplitude(res_s), cfg, lam, res_s)
        assert lhs == pytest.approx(rhs, rel=1e-9)
        assert rhs == pytest.approx(float(g4_amplitude(*cfg)) * res_s * math.log(lam), rel=1e-14)
    assert dilation_anomaly_4pt(nested_amplitude(res_s), cfg, 1.0, res_s) == (0.0, 0.0)


def test_dilation_anomaly_errors():
    p = np.zeros(4)
    with pytest.raises(ValueError):
        dilation_anomaly_4pt(g4_amplitude, [p, p, np.ones(4), -np.ones(4)], 2.0)
    with pytest.raises(ValueError):
        dilation_anomaly_4pt(g4_amplitude, [p, np.ones(4), 2 * np.ones(4), -np.ones(4)], 0.0)


def test_compose_res2():
    w3, w4 = wheel_period(3), wheel_period(4)
    assert compose_res2(w4, w3) == SymbolicPeriod.zeta(3, 5, coeff=120)
    assert compose_res2(w4, ONE) == w4
    assert compose_res2(w4, w4) == SymbolicPeriod.zeta(5, 5, coeff=400)
    assert str(compose_res2(w4, w4)) == "400*zeta(5)^2"

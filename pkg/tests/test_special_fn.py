import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from periodforge.special_fn import (
    CATALAN,
    ZETA,
    ZETA_3_5,
    bernoulli,
    binomial,
    bloch_wigner,
    dilog_complex,
    polylog_real,
    zeta_value,
)

mp.mp.dps = 30


def mp_bloch_wigner(z):
    z = mp.mpc(z)
    return mp.im(mp.polylog(2, z)) + mp.arg(1 - z) * mp.log(abs(z))


def test_zeta_table_against_mpmath():
    for n, v in ZETA.items():
        assert v == pytest.approx(float(mp.zeta(n)), rel=1e-15, abs=0)
    assert zeta_value(20) == pytest.approx(float(mp.zeta(20)), rel=1e-15)
    with pytest.raises(ValueError):
        zeta_value(1)


def test_zeta_by_slow_series():
    # Euler-Maclaurin tail after N terms
    def slow(n, N=2000):
        s = math.fsum(k ** (-n) for k in range(1, N))
        return s + N ** (1 - n) / (n - 1) + 0.5 * N ** (-n) + n * N ** (-n - 1) / 12

    assert zeta_value(5) == pytest.approx(slow(5), abs=1e-14)
    assert zeta_value(5) == pytest.approx(1.0369277551, abs=1e-10)
    assert zeta_value(2) == pytest.approx(math.pi**2 / 6, abs=1e-15)


def test_double_zeta_metadata():
    # zeta(3,5) = sum_{0<k<l} k^-3 l^-5 = sum_l l^-5 H_{l-1}^(3)
    assert ZETA_3_5 == pytest.approx(float(mp.nsum(lambda m: m**-5 * (mp.zeta(3) - mp.zeta(3, m)), [1, mp.inf])), rel=1e-15)
    assert ZETA_3_5 == pytest.approx(0.0377076729, abs=1e-10)


def test_bernoulli_and_binomial():
    assert [bernoulli(k) for k in range(5)] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30)]
    assert bernoulli(12) == Fraction(-691, 2730)
    assert binomial(6, 3) == 20 and binomial(8, 4) == 70
    assert binomial(200, 100) == math.comb(200, 100) > 2**64
    assert binomial(3, 5) == 0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
def test_polylog_real_against_mpmath(n):
    for x in np.linspace(-1, 1, 81):
        assert polylog_real(n, float(x)) == pytest.approx(float(mp.polylog(n, x)), abs=1e-14)


def test_polylog_edges():
    assert polylog_real(4, 0.0) == 0.0
    assert polylog_real(2, 1.0) == pytest.approx(math.pi**2 / 6, abs=1e-15)
    assert polylog_real(3, 1.0) == pytest.approx(1.2020569032, abs=1e-10)
    for bad in [(1, 0.5), (2, 1.5), (3, -1.01)]:
        with pytest.raises(ValueError):
            polylog_real(*bad)


@given(st.integers(2, 6), st.floats(0, 1), st.floats(0, 1))
def test_polylog_monotone(n, a, b):
    lo, hi = sorted((a, b))
    assert polylog_real(n, lo) <= polylog_real(n, hi) + 1e-15


def test_dilog_special_values():
    assert dilog_complex(0) == 0
    assert dilog_complex(1) == pytest.approx(math.pi**2 / 6, abs=1e-15)
    assert dilog_complex(1j).imag == pytest.approx(CATALAN, abs=1e-15)
    assert CATALAN == pytest.approx(float(mp.catalan), abs=1e-16)


def test_dilog_against_mpmath_random():
    rng = np.random.default_rng(3)
    mags = 10 ** rng.uniform(-3, 6, 2000)
    z = mags * np.exp(1j * rng.uniform(-np.pi, np.pi, 2000))
    got = dilog_complex(z)
    for zi, gi in zip(z[::7], got[::7]):
        ref = complex(mp.polylog(2, mp.mpc(zi)))
        assert abs(gi - ref) <= 1e-13 * max(1.0, abs(ref))


def test_dilog_on_cut_is_limit_from_below():
    for x in [1.5, 2.0, 10.0, 1e5]:
        ref = complex(mp.polylog(2, mp.mpc(x, -1e-40)))
        assert abs(dilog_complex(x) - ref) < 1e-12


def test_dilog_real_matches_polylog():
    for x in np.linspace(-1, 1, 201):
        assert dilog_complex(float(x)).real == pytest.approx(polylog_real(2, float(x)), abs=1e-12)


def test_bloch_wigner_values():
    assert bloch_wigner(1j) == pytest.approx(CATALAN, abs=1e-14)
    assert bloch_wigner(0.3) == 0 and bloch_wigner(-4.0) == 0 and bloch_wigner(1.0) == 0
    w = complex(0.5, math.sqrt(3) / 2)
    assert bloch_wigner(w) == pytest.approx(1.0149416064096536, abs=1e-14)


def test_bloch_wigner_against_mpmath():
    rng = np.random.default_rng(5)
    z = rng.normal(size=400) * 3 + 1j * rng.normal(size=400) * 3
    got = bloch_wigner(z)
    ref = np.array([float(mp_bloch_wigner(complex(x))) for x in z])
    assert np.max(np.abs(got - ref)) < 1e-12
    assert got.shape == z.shape


def test_bloch_wigner_symmetries():
    rng = np.random.default_rng(11)
    z = (rng.normal(size=1000) + 1j * rng.normal(size=1000)) * 2
    d = bloch_wigner(z)
    assert np.max(np.abs(bloch_wigner(np.conj(z)) + d)) < 1e-11
    assert np.max(np.abs(bloch_wigner(1 / z) + d)) < 1e-11
    assert np.max(np.abs(bloch_wigner(1 - z) + d)) < 1e-11

from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab import mp_law
from spikelab.errors import ConfigError, SubcriticalError

RATIOS = (0.1, 0.5, 1.0, 2.0, 10.0)


def test_edges_examples():
    assert mp_law.spectral_edges(1.0) == mp_law.SpectralEdges(0.0, 4.0)
    e = mp_law.spectral_edges(4.0)
    assert (e.lambda_minus, e.lambda_plus) == (1.0, 9.0)
    e = mp_law.spectral_edges(0.1)
    s = mpmath.sqrt(mpmath.mpf("0.1"))
    assert e.lambda_minus == pytest.approx(float((1 - s) ** 2), abs=1e-15)
    assert e.lambda_plus == pytest.approx(float((1 + s) ** 2), abs=1e-15)
    assert e.lambda_minus == pytest.approx(0.467544, abs=1e-6)
    assert e.lambda_plus == pytest.approx(1.732455, abs=1e-6)


@pytest.mark.parametrize("y", [0.0, -1.0, math.inf, math.nan])
def test_bad_ratio(y):
    with pytest.raises(ConfigError):
        mp_law.spectral_edges(y)


def test_theta_examples():
    assert mp_law.theta(2.0, 0.1) == pytest.approx(3.15, abs=1e-14)
    assert mp_law.theta(5.0, 1.0) == pytest.approx(7.2, abs=1e-14)
    y = 0.5
    assert mp_law.theta(math.sqrt(y) * (1 + 1e-6), y) == pytest.approx(mp_law.spectral_edges(y).lambda_plus, abs=1e-9)
    with pytest.raises(SubcriticalError):
        mp_law.theta(math.sqrt(y), y)


def test_gamma_examples():
    assert mp_law.gamma_shrink(mp_law.theta(3.0, 0.5), 0.5) == pytest.approx(3.0, abs=1e-12)
    assert mp_law.gamma_shrink(7.2, 1.0) == pytest.approx(5.0, abs=1e-12)
    y = 0.3
    lp = mp_law.spectral_edges(y).lambda_plus
    assert mp_law.gamma_shrink(lp * (1 + 1e-8), y) == pytest.approx(math.sqrt(y), abs=1e-3)
    with pytest.raises(SubcriticalError):
        mp_law.gamma_shrink(lp, y)
    with pytest.raises(SubcriticalError):
        mp_law.gamma_shrink(0.5 * lp, y)


def test_vartheta_examples():
    assert mp_law.vartheta(2.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert mp_law.vartheta(1e6, 1.0) == pytest.approx(1.0, abs=3e-6)
    assert mp_law.vartheta(1.0 + 1e-7, 1.0) == pytest.approx(0.0, abs=1e-6)


def test_aux_examples():
    for d in (1.5, 3.0, 40.0):
        assert mp_law.aux_funcs(d, 1.0).h == pytest.approx(1.0, abs=1e-15)
    assert mp_law.aux_funcs(1.0 + 1e-7, 1.0).l == pytest.approx(math.sqrt(2.0), abs=1e-6)


def test_aux_against_high_precision():
    mpmath.mp.dps = 40
    d, y = mpmath.mpf(2), mpmath.mpf("0.1")
    f = y * (1 + d) / (d * (d + y)) * (1 + d * (1 + d) / (d + y))
    g = 2 * mpmath.sqrt((d + 1) * (d + mpmath.sqrt(y))) / (d + y)
    h = (d + 1) / (d + y)
    l = (1 + d) / mpmath.sqrt(d * (d + y))
    got = mp_law.aux_funcs(2.0, 0.1)
    for a, b in zip(got, (f, g, h, l)):
        assert a == pytest.approx(float(b), rel=1e-14)


def test_derivatives_against_finite_differences():
    for y in RATIOS:
        d = 3.0 * math.sqrt(y) + 0.5
        e = 1e-6 * d
        fd = (mp_law.theta(d + e, y) - mp_law.theta(d - e, y)) / (2 * e)
        assert mp_law.theta_prime(d, y) == pytest.approx(fd, rel=1e-7)
        fd = (mp_law.vartheta(d + e, y) - mp_law.vartheta(d - e, y)) / (2 * e)
        assert mp_law.vartheta_prime(d, y) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("y", RATIOS)
def test_monotone_on_grid(y):
    ds = math.sqrt(y) * np.geomspace(1.001, 1e5, 300)
    th = [mp_law.theta(d, y) for d in ds]
    vt = [mp_law.vartheta(d, y) for d in ds]
    assert np.all(np.diff(th) > 0)
    assert np.all(np.diff(vt) > 0)


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.01, 50.0), ratio=st.floats(1.001, 1e5))
def test_inverse_pair_property(y, ratio):
    d = math.sqrt(y) * ratio
    assert abs(mp_law.gamma_shrink(mp_law.theta(d, y), y) - d) <= 1e-10 * max(1.0, d)


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.01, 50.0), ratio=st.floats(1.001, 1e4))
def test_aux_positive_and_vartheta_in_unit_interval(y, ratio):
    d = math.sqrt(y) * ratio
    assert all(v > 0 for v in mp_law.aux_funcs(d, y))
    assert 0.0 < mp_law.vartheta(d, y) < 1.0


def _quad1(z, y):
    m = mp_law.stieltjes_m1(z, y)
    return abs(z * y * m * m + (z - (1 - y)) * m + 1)


def _quad2(z, y):
    m = mp_law.stieltjes_m2(z, y)
    return abs(z * m * m + (z + (1 - y)) * m + 1)


@pytest.mark.parametrize("y", RATIOS)
def test_stieltjes_real_axis(y):
    z = mp_law.spectral_edges(y).lambda_plus + 0.7
    m1 = mp_law.stieltjes_m1(z, y)
    assert abs(m1.imag) == 0.0
    assert _quad1(z, y) < 1e-12
    assert _quad2(z, y) < 1e-12


def test_stieltjes_asymptote():
    z = 1e8
    assert (mp_law.stieltjes_m1(z, 0.5) * z).real == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("y", (0.1, 1.0, 10.0))
def test_identity_first_at_edge(y):
    z = mp_law.spectral_edges(y).lambda_plus + 1.0
    m1, m2 = mp_law.stieltjes_m1(z, y), mp_law.stieltjes_m2(z, y)
    assert abs(m1 + 1.0 / (z * (1.0 + m2))) < 1e-12


@pytest.mark.parametrize("y", (0.2, 3.0))
def test_stieltjes_rejects_support(y):
    e = mp_law.spectral_edges(y)
    with pytest.raises(ConfigError):
        mp_law.stieltjes_m1(0.5 * (e.lambda_minus + e.lambda_plus), y)
    with pytest.raises(ConfigError):
        mp_law.stieltjes_m2(0.0, y)


def test_stieltjes_upper_half_plane():
    rng = np.random.default_rng(3)
    for _ in range(100):
        y = float(rng.uniform(0.05, 5.0))
        z = complex(rng.uniform(-3, 10), rng.uniform(1e-3, 5))
        assert mp_law.stieltjes_m1(z, y).imag > 0
        assert mp_law.stieltjes_m2(z, y).imag > 0


def _random_z(rng, y):
    e = mp_law.spectral_edges(y)
    if rng.random() < 0.5:
        return complex(rng.uniform(-5, 15), rng.choice([-1, 1]) * rng.uniform(1e-2, 5))
    x = e.lambda_plus + rng.uniform(1e-2, 10) if rng.random() < 0.7 else -rng.uniform(1e-2, 5)
    return complex(x, 0.0)


def test_quadratic_residuals_random_points():
    rng = np.random.default_rng(11)
    for y in RATIOS:
        for _ in range(100):
            z = _random_z(rng, y)
            assert _quad1(z, y) < 1e-10
            assert _quad2(z, y) < 1e-10


@pytest.mark.parametrize("y", RATIOS)
def test_all_identities(y):
    lp = mp_law.spectral_edges(y).lambda_plus
    for z in (lp + 0.05, lp + 1.0, lp + 30.0, complex(1.0, 0.5)):
        m1, m2 = mp_law.stieltjes_m1(z, y), mp_law.stieltjes_m2(z, y)
        m1p, m2p = mp_law.stieltjes_m1_prime(z, y), mp_law.stieltjes_m2_prime(z, y)
        assert abs(m1 + 1.0 / (z * (1.0 + m2))) < 1e-10
        assert abs((1.0 + z * m1) - (1.0 + z * m2) / y) < 1e-10
        assert abs(m1 * ((m2 + z * m2p) + 1.0) - m1p / m1) < 1e-10


def test_stieltjes_derivative_against_mpmath():
    mpmath.mp.dps = 30
    y = 0.5
    z = mp_law.spectral_edges(y).lambda_plus + 0.3
    lm, lp = (1 - mpmath.sqrt(y)) ** 2, (1 + mpmath.sqrt(y)) ** 2

    def m1(x):
        return (1 - y - x + mpmath.sqrt(x - lp) * mpmath.sqrt(x - lm)) / (2 * x * y)

    def m2(x):
        return (y - 1 - x + mpmath.sqrt(x - lp) * mpmath.sqrt(x - lm)) / (2 * x)

    assert mp_law.stieltjes_m1_prime(z, y).real == pytest.approx(float(mpmath.diff(m1, z)), rel=1e-12)
    assert mp_law.stieltjes_m2_prime(z, y).real == pytest.approx(float(mpmath.diff(m2, z)), rel=1e-12)
    assert abs(complex(mp_law.stieltjes_m1(z, y)) - complex(m1(mpmath.mpf(z)))) < 1e-14
    assert cmath.isfinite(mp_law.stieltjes_m2(z, y))

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.errors import ConfigError
from spikelab.model import (
    GAUSSIAN,
    TWO_POINT,
    EntryLaw,
    SpikedModel,
    cumulants,
    population_covariance,
    sample_covariance,
    sample_data,
    sqrt_sigma_apply,
)
from spikelab.rng import Purpose, stream


def test_cumulant_examples():
    assert cumulants(GAUSSIAN) == (0.0, 0.0)
    k3, k4 = cumulants(TWO_POINT)
    assert k4 == -1.5
    assert k3 == pytest.approx(math.sqrt(2.0) / 2.0, abs=1e-15)


def test_two_point_cumulants_exact_arithmetic():
    # a = sqrt(2), b = -1/sqrt(2), p = 1/3: moments in exact rationals with a^2 = 2, b^2 = 1/2
    p = Fraction(1, 3)
    m4 = p * 4 + (1 - p) * Fraction(1, 4)
    assert m4 - 3 == Fraction(-3, 2)
    # third moment: p a^3 + (1-p) b^3 = sqrt(2) * (2/3 - 1/6) = sqrt(2)/2
    assert p * 2 - (1 - p) * Fraction(1, 4) == Fraction(1, 2)


@pytest.mark.parametrize(
    "law",
    [
        dict(kind="two_point", value_hi=1.0, value_lo=-1.0, prob_hi=0.3),
        dict(kind="two_point", value_hi=1.0, value_lo=-1.0, prob_hi=1.5),
        dict(kind="laplace"),
    ],
)
def test_bad_laws(law):
    with pytest.raises(ConfigError):
        EntryLaw(**law)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0.02, 0.98))
def test_two_point_cumulants_match_moments(p):
    a = math.sqrt((1 - p) / p)
    law = EntryLaw("two_point", a, -1.0 / a, p)
    k3, k4 = cumulants(law)
    assert k3 == pytest.approx(p * a**3 + (1 - p) * (-1 / a) ** 3, rel=1e-9, abs=1e-12)
    assert k4 == pytest.approx(p * a**4 + (1 - p) * a**-4 - 3.0, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("law", [GAUSSIAN, TWO_POINT])
def test_sample_moments(law):
    model = SpikedModel.build(200, 400, [3.0], law=law)
    X = sample_data(model, stream(5, 0, Purpose.DATA)) * math.sqrt(model.N)
    n = X.size
    assert abs(X.mean()) < 4 / math.sqrt(n)
    assert X.var() == pytest.approx(1.0, abs=4 * math.sqrt(2.0 / n) * 2)
    k4 = float(np.mean(X**4) - 3.0)
    assert k4 == pytest.approx(cumulants(law)[1], abs=0.05)


def test_determinism():
    model = SpikedModel.build(30, 60, [(4.0, 2), (1.5, 1)], law=TWO_POINT)
    a = sample_data(model, stream(9, 3))
    b = sample_data(model, stream(9, 3))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_data(model, stream(9, 4)))


def test_streams_distinct_by_purpose():
    a = stream(1, 0, Purpose.DATA).standard_normal(8)
    b = stream(1, 0, Purpose.MIXTURE).standard_normal(8)
    assert not np.array_equal(a, b)


def test_null_model_gives_xxt():
    zero = SpikedModel(5, 9, (), np.zeros((5, 0)))
    X = sample_data(zero, stream(2))
    assert np.allclose(sample_covariance(zero, X), X @ X.T, atol=1e-15)


def test_identity_data_gives_sigma():
    rng = np.random.default_rng(0)
    V, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    model = SpikedModel.build(6, 6, [5.0, 2.0], directions=V)
    assert np.allclose(sample_covariance(model, np.eye(6)), population_covariance(model), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), d1=st.floats(0.1, 50), d2=st.floats(0.01, 0.09))
def test_sqrt_sigma_squares_to_sigma(seed, d1, d2):
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((7, 2)))
    model = SpikedModel.build(7, 3, [d1, d2], directions=V)
    S = sqrt_sigma_apply(model, np.eye(7))
    assert np.allclose(S @ S.T, population_covariance(model), atol=1e-10 * (1 + d1))
    assert np.allclose(S, S.T, atol=1e-12 * (1 + d1))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(M=5, N=5, spikes=[2.0, 3.0]),
        dict(M=5, N=5, spikes=[(2.0, 0)]),
        dict(M=5, N=5, spikes=[-1.0]),
        dict(M=2, N=5, spikes=[3.0, 2.0, 1.0]),
        dict(M=5, N=5, spikes=[3.0], directions=np.ones((5, 1))),
        dict(M=5, N=5, spikes=[3.0], directions="random"),
    ],
)
def test_model_validation(kwargs):
    with pytest.raises(ConfigError):
        SpikedModel.build(**kwargs)


def test_multiplicity_expands_per_index():
    model = SpikedModel.build(10, 20, [(8.0, 2), (3.0, 1)])
    assert model.rank == 3
    assert model.d_per_index.tolist() == [8.0, 8.0, 3.0]
    assert model.y == 0.5

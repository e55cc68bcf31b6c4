from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mlmc_reliability.distributions import (
    Exponential,
    ParameterError,
    Weibull,
    dist_from_dict,
    make_rng,
    sample,
    sample_conditional,
    sample_matrix,
    uniform_open,
    weibull_scale_arrays,
)


@pytest.mark.parametrize("shape,scale", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.inf, 1)])
def test_weibull_rejects_bad_parameters(shape, scale):
    with pytest.raises(ParameterError):
        Weibull(shape, scale)


@pytest.mark.parametrize("rate", [-0.1, math.inf, math.nan])
def test_exponential_rejects_bad_rate(rate):
    with pytest.raises(ParameterError):
        Exponential(rate)


@pytest.mark.parametrize("shape,scale", [(0.5, 2.0), (1.0, 5.0), (3.0, 10.0)])
def test_weibull_moments_match_scipy(shape, scale):
    d = Weibull(shape, scale)
    ref = stats.weibull_min(shape, scale=scale)
    assert d.mean() == pytest.approx(ref.mean(), rel=1e-12)
    assert d.variance() == pytest.approx(ref.var(), rel=1e-10)
    t = np.linspace(0, 30, 7)
    np.testing.assert_allclose(d.cdf(t), ref.cdf(t), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("shape,scale", [(0.5, 2.0), (1.0, 1.0), (3.0, 7.5)])
def test_weibull_sampling_ks(shape, scale):
    x = sample(Weibull(shape, scale), make_rng(11), 20000)
    assert stats.kstest(x, stats.weibull_min(shape, scale=scale).cdf).pvalue > 1e-3


def test_exponential_sampling_ks():
    x = sample(Exponential(0.05), make_rng(3), 20000)
    assert stats.kstest(x, stats.expon(scale=20.0).cdf).pvalue > 1e-3


def test_rate_zero_never_fires():
    d = Exponential(0.0)
    assert sample(d, make_rng(0)) == math.inf
    assert np.all(np.isinf(sample(d, make_rng(0), 5)))
    assert d.scale == math.inf and d.mean() == math.inf


def test_conditional_sampling_matches_truncated_law():
    shape, scale, age = 0.5, 4.0, 3.0
    d = Weibull(shape, scale)
    rem = sample_conditional(d, age, make_rng(5), 20000)
    ref = stats.weibull_min(shape, scale=scale)

    def cdf(r):
        return 1.0 - ref.sf(age + r) / ref.sf(age)

    assert np.all(rem > 0)
    assert stats.kstest(rem, cdf).pvalue > 1e-3


def test_conditional_at_age_zero_is_unconditional():
    d = Weibull(2.0, 3.0)
    a = sample_conditional(d, 0.0, make_rng(9), 100)
    b = sample(d, make_rng(9), 100)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_conditional_rejects_negative_age():
    with pytest.raises(ParameterError):
        sample_conditional(Weibull(1, 1), -1.0, make_rng(0))


def test_exponential_is_memoryless():
    d = Exponential(2.0)
    a = sample_conditional(d, 5.0, make_rng(4), 50)
    b = sample(d, make_rng(4), 50)
    np.testing.assert_array_equal(a, b)


def test_streams_reproducible_and_distinct():
    a = make_rng(1, 2, 3).random(4)
    b = make_rng(1, 2, 3).random(4)
    c = make_rng(1, 2, 4).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniform_open_excludes_zero():
    class ZeroRng:
        def random(self, size=None):
            return 0.0 if size is None else np.zeros(size)

    assert uniform_open(ZeroRng()) > 0
    assert np.all(uniform_open(ZeroRng(), 3) > 0)


def test_sample_matrix_rows_follow_single_draws():
    dists = [Weibull(0.5, 2.0), Exponential(1.0), Weibull(3.0, 9.0)]
    inv, scale = weibull_scale_arrays(dists)
    m = sample_matrix(inv, scale, make_rng(7), 4)
    rng = make_rng(7)
    for row in m:
        u = uniform_open(rng, 3)
        np.testing.assert_allclose(row, [d.inverse(x) for d, x in zip(dists, u)], rtol=1e-12)


@given(
    st.one_of(
        st.builds(Weibull, st.floats(0.1, 10), st.floats(0.01, 100)),
        st.builds(Exponential, st.floats(0, 10)),
    )
)
@settings(max_examples=50)
def test_dict_round_trip(d):
    assert dist_from_dict(d.to_dict()) == d


def test_unknown_kind():
    with pytest.raises(ParameterError):
        dist_from_dict({"kind": "gamma", "shape": 1})

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fimkit import core
from fimkit.core import (
    Diffusivity,
    DomainError,
    HurstExponent,
    RngStream,
    TimeGrid,
    log_regularized_upper_incomplete_gamma,
    regularized_lower_incomplete_gamma,
)


@pytest.mark.parametrize("h", [0.0, 1.0, -0.1, 1.2, float("nan")])
def test_hurst_rejects_outside_unit_interval(h):
    with pytest.raises(DomainError, match=r"Hurst exponent must lie in \(0,1\)"):
        HurstExponent(h)


def test_hurst_classification():
    assert HurstExponent(0.25).classification() is Diffusivity.SUB
    assert HurstExponent(0.5).classification() is Diffusivity.REGULAR
    assert HurstExponent(0.75).classification() is Diffusivity.SUPER
    assert core.as_hurst(HurstExponent(0.3)) == 0.3


def test_stream_is_a_value():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    assert np.array_equal(a, b)


def test_streams_differ_by_id_seed_and_child():
    draws = [
        RngStream(7, 3).generator().random(4),
        RngStream(7, 4).generator().random(4),
        RngStream(8, 3).generator().random(4),
        RngStream(7, 3).child(0).generator().random(4),
        RngStream(7, 3).child(1).generator().random(4),
    ]
    for i in range(len(draws)):
        for j in range(i):
            assert not np.array_equal(draws[i], draws[j])


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_stream_rejects_bad_seed(seed):
    with pytest.raises(DomainError):
        RngStream(seed)


def test_uniform_grid():
    g = TimeGrid.uniform(1.0, 4)
    assert np.array_equal(g.times, [0, 0.25, 0.5, 0.75, 1.0])
    assert g.step == 0.25 and g.is_uniform and len(g) == 5
    assert TimeGrid(np.array([0.0, 0.1, 0.3])).step is None


@pytest.mark.parametrize("times", [[0.1, 0.2], [0.0, 0.2, 0.2], [0.0, 0.3, 0.1], []])
def test_grid_rejects(times):
    with pytest.raises(DomainError):
        TimeGrid(np.array(times))


def test_gamma_sample_shape_below_one():
    z = core.gamma_sample(0.25, RngStream(1), size=200_000)
    assert abs(z.mean() - 0.25) < 0.005
    with pytest.raises(DomainError):
        core.gamma_sample(0.0, RngStream(1))


# incomplete gamma against scipy as an independent oracle

A = [0.05, 0.25, 0.5, 0.75, 1.0, 3.0, 30.0, 250.0]
X = np.concatenate([[0.0], np.logspace(-8, 3, 60)])


@pytest.mark.parametrize("a", A)
def test_lower_incomplete_gamma_oracle(a):
    got = regularized_lower_incomplete_gamma(a, X)
    assert np.max(np.abs(got - special.gammainc(a, X))) < 1e-13


@pytest.mark.parametrize("a", A)
def test_log_upper_incomplete_gamma_oracle(a):
    x = X[X < 600]
    want = np.log(special.gammaincc(a, x))
    got = log_regularized_upper_incomplete_gamma(a, x)
    ok = np.isfinite(want)
    assert np.max(np.abs(got[ok] - want[ok])) < 1e-11


def test_log_upper_far_tail_matches_asymptotics():
    # Q(a, x) ~ x^(a-1) e^-x / Gamma(a) (1 + (a-1)/x) for large x
    a, x = 0.75, 5000.0
    approx = (a - 1) * math.log(x) - x - math.lgamma(a) + math.log1p((a - 1) / x)
    assert abs(log_regularized_upper_incomplete_gamma(a, x) - approx) < 1e-6


def test_incomplete_gamma_numpy_fallback_matches():
    for a in A:
        lga = math.lgamma(a)
        assert np.allclose(core._incgamma_np(a, X, lga, log_upper=False),
                           special.gammainc(a, X), rtol=0, atol=1e-13)


def test_incomplete_gamma_frozen_quantile():
    assert regularized_lower_incomplete_gamma(0.5, 1.92073) == pytest.approx(0.95000004, abs=1e-8)


def test_incomplete_gamma_rejects():
    with pytest.raises(DomainError):
        regularized_lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(DomainError):
        regularized_lower_incomplete_gamma(1.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.01, 50.0), x=st.floats(0.0, 200.0))
def test_incomplete_gamma_in_unit_interval(a, x):
    p = regularized_lower_incomplete_gamma(a, x)
    q = math.exp(log_regularized_upper_incomplete_gamma(a, x))
    assert 0.0 <= p <= 1.0
    assert abs(p + q - 1.0) < 1e-12

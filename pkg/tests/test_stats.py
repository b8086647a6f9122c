import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from ssmfbvar.errors import ConfigurationError, NumericalError
from ssmfbvar.stats import (
    gig_logpdf_unnormalized,
    logpdf_normal_mv,
    rng_stream,
    sample_gig,
    sample_inverse_wishart,
    sample_pi_matrix,
    sample_truncated_normal,
)


def gig_moments(a, b, c):
    """Mean and variance of GIG(a, b, c) from Bessel-function ratios."""
    if c == 0:
        return 2 * a / b, 4 * a / b ** 2
    w = math.sqrt(b * c)
    m1 = math.sqrt(c / b) * special.kve(a + 1, w) / special.kve(a, w)
    m2 = (c / b) * special.kve(a + 2, w) / special.kve(a, w)
    return m1, m2 - m1 ** 2


def test_streams_are_deterministic_and_distinct():
    a = rng_stream(7, 3).standard_normal(5)
    b = rng_stream(7, 3).standard_normal(5)
    c = rng_stream(7, 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    with pytest.raises(ConfigurationError):
        rng_stream(-1)


def test_inverse_wishart_scalar_mean():
    rng = rng_stream(1)
    x = np.array([sample_inverse_wishart(np.array([[2.0]]), 4.0, rng)[0, 0] for _ in range(20_000)])
    assert abs(x.mean() - 1.0) < 3 * x.std() / math.sqrt(x.size)


def test_inverse_wishart_identity_mean_and_symmetry():
    rng = rng_stream(2)
    X = np.array([sample_inverse_wishart(np.eye(2), 5.0, rng) for _ in range(20_000)])
    np.testing.assert_allclose(X.mean(0), np.eye(2) / 2, atol=0.05)
    assert np.max(np.abs(X - X.transpose(0, 2, 1))) < 1e-12
    with pytest.raises(ConfigurationError):
        sample_inverse_wishart(np.eye(2), 0.5, rng)


def test_pi_matrix_zero_noise_and_covariance():
    rng = rng_stream(3)
    precursor = np.array([[1.0, 0.5], [0.2, -0.3]])
    obi = np.array([[2.0, 0.3], [0.3, 1.0]])
    Sigma = np.array([[1.0, 0.4], [0.4, 0.5]])
    Omega = np.linalg.inv(obi)
    Pi_bar = precursor @ Omega
    np.testing.assert_allclose(sample_pi_matrix(precursor, obi, Sigma, rng, xi=np.zeros((2, 2))), Pi_bar,
                               atol=1e-14)
    D = np.array([sample_pi_matrix(precursor, obi, Sigma, rng) for _ in range(50_000)])
    vec = D.reshape(len(D), -1)  # row-major: vec of Pi'
    np.testing.assert_allclose(vec.mean(0), Pi_bar.ravel(), atol=0.02)
    C = np.cov(vec.T)
    target = np.kron(Sigma, Omega)
    big = np.abs(target) > 0.05
    np.testing.assert_allclose(C[big], target[big], rtol=0.05)


def test_pi_matrix_identity_case():
    rng = rng_stream(4)
    D = np.array([sample_pi_matrix(np.zeros((2, 3)), np.eye(3), np.eye(2), rng) for _ in range(5000)])
    x = D.ravel()
    assert stats.kstest(x, "norm").pvalue > 0.01


@pytest.mark.parametrize(
    "a,b,c",
    [(3.0, 2.0, 0.0), (-0.5, 2.0, 3.0), (2.0, 1.0, 1.0), (0.3, 0.5, 0.1), (5.0, 10.0, 0.01), (-2.0, 1.0, 4.0)],
)
def test_gig_moments(a, b, c):
    y = sample_gig(a, b, c, rng_stream(5, int(10 * a + 30)), size=20_000)
    m, v = gig_moments(a, b, c)
    assert np.all(y > 0)
    assert abs(y.mean() - m) < 3 * math.sqrt(v / y.size)


def test_gig_inverse_gaussian_family():
    b, c = 2.0, 3.0
    y = sample_gig(-0.5, b, c, rng_stream(6), size=20_000)
    # GIG(-1/2, b, c) is inverse Gaussian with mean sqrt(c/b) and shape c
    mean, shape = math.sqrt(c / b), c
    assert stats.kstest(y, stats.invgauss(mean / shape, scale=shape).cdf).pvalue > 0.01


def test_gig_ks_against_scipy():
    a, b, c = 1.0, 3.0, 0.25
    y = sample_gig(a, b, c, rng_stream(7), size=10_000)
    ref = stats.geninvgauss(a, math.sqrt(b * c), scale=math.sqrt(c / b))
    assert stats.kstest(y, ref.cdf).pvalue > 0.01


def test_gig_kernel_sign():
    y = np.array([0.5, 1.0, 2.0])
    lp = gig_logpdf_unnormalized(y, 1.5, 2.0, 1.0)
    np.testing.assert_allclose(lp, 0.5 * np.log(y) - 0.5 * (2.0 * y + 1.0 / y))


def test_gig_improper_limits_raise():
    with pytest.raises((NumericalError, ConfigurationError)):
        sample_gig(-1.0, 1.0, 0.0, rng_stream(0))


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 5), st.floats(0.05, 5), st.integers(0, 1000))
def test_gig_positive_and_deterministic(a, b, c, seed):
    y1 = sample_gig(a, b, c, rng_stream(seed), size=20)
    y2 = sample_gig(a, b, c, rng_stream(seed), size=20)
    assert np.all(y1 > 0) and np.all(np.isfinite(y1))
    np.testing.assert_array_equal(y1, y2)


def test_truncated_normal_cases():
    rng = rng_stream(8)
    y = sample_truncated_normal(2.0, 0.01, -1.0, 1.0, rng, size=20_000)
    assert np.all((y > -1) & (y < 1))
    assert np.mean(y > 0.9) > 0.95
    y = sample_truncated_normal(0.0, 1e-12, -1.0, 1.0, rng, size=100)
    assert np.max(np.abs(y)) < 1e-4
    y = sample_truncated_normal(0.0, 1.0, -np.inf, np.inf, rng, size=10_000)
    assert stats.kstest(y, "norm").pvalue > 0.01


@pytest.mark.parametrize("mu,var,lo,hi", [(0.0, 1.0, -1.0, 1.0), (0.5, 2.0, 0.0, np.inf), (-3.0, 1.0, -np.inf, -2.5)])
def test_truncated_normal_moments(mu, var, lo, hi):
    y = sample_truncated_normal(mu, var, lo, hi, rng_stream(9), size=20_000)
    s = math.sqrt(var)
    d = stats.truncnorm((lo - mu) / s, (hi - mu) / s, mu, s)
    assert abs(y.mean() - d.mean()) < 3 * math.sqrt(d.var() / y.size)


def test_logpdf_normal_mv_hand_values():
    assert logpdf_normal_mv(np.zeros(1), np.zeros(1), np.eye(1)) == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert logpdf_normal_mv(np.ones(2), np.zeros(2), np.eye(2)) == pytest.approx(-math.log(2 * math.pi) - 1.0)
    diff = logpdf_normal_mv(np.zeros(1), np.zeros(1), 4 * np.eye(1)) - logpdf_normal_mv(
        np.zeros(1), np.zeros(1), np.eye(1))
    assert diff == pytest.approx(-0.5 * math.log(4.0), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_logpdf_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3))
    cov = A @ A.T + 0.5 * np.eye(3)
    y, m = rng.normal(size=3), rng.normal(size=3)
    ref = stats.multivariate_normal(m, cov).logpdf(y)
    assert logpdf_normal_mv(y, m, cov) == pytest.approx(ref, rel=1e-10, abs=1e-10)

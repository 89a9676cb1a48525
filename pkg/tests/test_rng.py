import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from conftest import ks_distance
from tvisvar.rng import (
    NotPositiveDefiniteError,
    chain_seeds,
    make_rng,
    precision_mean,
    sample_dirichlet,
    sample_gamma,
    sample_gig,
    sample_ig2,
    sample_mvn_precision,
    sample_truncated_normal,
    spawn_rngs,
)

N_DRAWS = 100_000


def gig_log_kernel(x, lam, chi, psi):
    return (lam - 1) * np.log(x) - 0.5 * (chi / x + psi * x)


def quad_moments(logk, lo, hi):
    z = integrate.quad(lambda x: math.exp(logk(x)), lo, hi, limit=200)[0]
    m1 = integrate.quad(lambda x: x * math.exp(logk(x)), lo, hi, limit=200)[0] / z
    m2 = integrate.quad(lambda x: x * x * math.exp(logk(x)), lo, hi, limit=200)[0] / z
    return m1, m2 - m1 * m1


def grid_cdf(logk, lo, hi, n=200_001):
    x = np.linspace(lo, hi, n)
    with np.errstate(divide="ignore"):
        d = np.exp(logk(x) - np.max(logk(x[1:-1])))
    d[~np.isfinite(d)] = 0.0
    c = integrate.cumulative_trapezoid(d, x, initial=0.0)
    c /= c[-1]
    return lambda q: np.interp(q, x, c)


def test_same_seed_same_stream():
    a = make_rng(5).standard_normal(10)
    b = make_rng(5).standard_normal(10)
    assert np.array_equal(a, b)


def test_spawned_streams_differ():
    r1, r2 = spawn_rngs(5, 2)
    assert not np.array_equal(r1.standard_normal(10), r2.standard_normal(10))
    assert chain_seeds(5, 3) == chain_seeds(5, 3)
    assert len(set(chain_seeds(5, 3))) == 3


class TestGig:
    def test_gamma_limit(self):
        x = sample_gig(1.0, 0.0, 0.8, make_rng(1), size=N_DRAWS)
        assert abs(x.mean() / (2 / 0.8) - 1) < 0.02

    def test_inverse_gaussian_case(self):
        chi, psi = 2.0, 0.5
        x = sample_gig(-0.5, chi, psi, make_rng(2), size=N_DRAWS)
        mu = math.sqrt(chi / psi)
        assert abs(x.mean() / mu - 1) < 0.02
        assert abs(x.var() / (mu**3 / chi) - 1) < 0.05
        assert ks_distance(x, stats.invgauss(mu / chi, scale=chi).cdf) < 0.01

    def test_quadrature_oracle(self):
        lam, chi, psi = 0.3, 1.7, 0.9
        x = sample_gig(lam, chi, psi, make_rng(3), size=N_DRAWS)
        logk = lambda v: gig_log_kernel(v, lam, chi, psi)  # noqa: E731
        m, v = quad_moments(logk, 0, np.inf)
        assert abs(x.mean() / m - 1) < 0.01
        assert abs(x.var() / v - 1) < 0.02
        assert ks_distance(x, grid_cdf(logk, 1e-9, 80.0)) < 0.01

    def test_inverse_gamma_limit(self):
        # psi = 0, lam < 0: inverse gamma with shape -lam and scale chi/2
        x = sample_gig(-3.0, 4.0, 0.0, make_rng(4), size=N_DRAWS)
        assert abs(x.mean() / (2.0 / 2.0) - 1) < 0.02

    def test_both_zero_rejected(self):
        with pytest.raises(ValueError):
            sample_gig(1.0, 0.0, 0.0, make_rng(0))

    @settings(max_examples=40, deadline=None)
    @given(
        lam=st.floats(-5, 5),
        chi=st.floats(1e-3, 50),
        psi=st.floats(1e-3, 50),
        seed=st.integers(0, 2**31),
    )
    def test_positive(self, lam, chi, psi, seed):
        x = sample_gig(lam, chi, psi, make_rng(seed), size=20)
        assert np.all(x > 0) and np.all(np.isfinite(x))


class TestGammaIg2:
    def test_ig2_mean_and_ks(self):
        s, nu = 3.0, 7.0
        x = sample_ig2(s, nu, make_rng(5), size=N_DRAWS)
        assert abs(x.mean() / (s / (nu - 2)) - 1) < 0.02
        logk = lambda v: -(nu + 2) / 2 * np.log(v) - s / (2 * v)  # noqa: E731
        m, var = quad_moments(logk, 0, np.inf)
        assert abs(x.mean() / m - 1) < 0.02
        assert abs(x.var() / var - 1) < 0.10  # heavy right tail
        assert ks_distance(x, grid_cdf(logk, 1e-9, 400.0)) < 0.01

    @pytest.mark.parametrize("scale,shape,mean", [(1.0, 0.5, 0.5), (2.0, 3.0, 6.0)])
    def test_gamma(self, scale, shape, mean):
        x = sample_gamma(scale, shape, make_rng(6), size=N_DRAWS)
        assert abs(x.mean() / mean - 1) < 0.02
        logk = lambda v: (shape - 1) * np.log(v) - v / scale  # noqa: E731
        m, var = quad_moments(logk, 0, np.inf)
        assert abs(x.var() / var - 1) < 0.02
        assert ks_distance(x, stats.gamma(shape, scale=scale).cdf) < 0.01

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_gamma(-1.0, 1.0, make_rng(0))


class TestTruncatedNormal:
    def test_symmetric(self):
        x = sample_truncated_normal(0.0, 1.0, -1.0, 1.0, make_rng(7), size=N_DRAWS)
        assert np.all((x > -1) & (x < 1))
        assert abs(x.mean()) < 0.01
        assert ks_distance(x, stats.truncnorm(-1, 1).cdf) < 0.01

    def test_far_tail(self):
        x = sample_truncated_normal(10.0, 1.0, -1.0, 1.0, make_rng(8), size=N_DRAWS)
        assert np.all((x > -1) & (x < 1))
        logk = lambda v: -0.5 * (v - 10.0) ** 2  # noqa: E731
        m, v = quad_moments(logk, -1, 1)
        assert abs(x.mean() - m) < 0.02 * abs(m)
        assert abs(x.var() / v - 1) < 0.02
        assert x.mean() > 0.85
        assert ks_distance(x, stats.truncnorm(-11, -9, loc=10).cdf) < 0.01

    def test_inactive_truncation(self):
        x = sample_truncated_normal(0.5, 0.01, -1.0, 1.0, make_rng(9), size=N_DRAWS)
        assert abs(x.mean() - 0.5) < 0.002
        assert abs(x.std() / 0.1 - 1) < 0.02

    def test_two_sided_narrow_tail(self):
        x = sample_truncated_normal(-20.0, 1.0, 5.0, 6.0, make_rng(10), size=20_000)
        assert np.all((x > 5) & (x < 6))
        assert ks_distance(x, stats.truncnorm(25, 26, loc=-20).cdf) < 0.02

    @settings(max_examples=60, deadline=None)
    @given(
        mu=st.floats(-50, 50),
        sd=st.floats(0.01, 10),
        lo=st.floats(-5, 5),
        width=st.floats(0.01, 5),
        seed=st.integers(0, 2**31),
    )
    def test_in_bounds(self, mu, sd, lo, width, seed):
        x = sample_truncated_normal(mu, sd * sd, lo, lo + width, make_rng(seed), size=5)
        assert np.all((x >= lo) & (x <= lo + width))


class TestDirichlet:
    @pytest.mark.parametrize("alpha", [(1.0, 1.0), (12.0, 1.0), (2.0, 3.0, 5.0)])
    def test_mean(self, alpha):
        alpha = np.array(alpha)
        x = sample_dirichlet(alpha, make_rng(11), size=N_DRAWS)
        assert np.allclose(x.sum(axis=1), 1.0)
        assert np.all(x >= 0)
        assert np.allclose(x.mean(axis=0), alpha / alpha.sum(), rtol=0.01, atol=0.005)


class TestPrecisionGaussian:
    def test_identity(self):
        x = np.array([sample_mvn_precision(np.zeros(3), np.eye(3), make_rng(i)) for i in range(2000)])
        assert np.allclose(x.mean(axis=0), 0, atol=0.1)
        assert np.allclose(np.cov(x.T), np.eye(3), atol=0.1)

    def test_random_spd_covariance(self):
        rng = make_rng(12)
        G = rng.standard_normal((5, 5))
        prec = G @ G.T + 5 * np.eye(5)
        loc = rng.standard_normal(5)
        cov = np.linalg.inv(prec)
        z = rng.standard_normal((N_DRAWS, 5))
        x = np.array([sample_mvn_precision(loc, prec, z=zi) for zi in z])
        scale = np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
        assert np.all(np.abs(np.cov(x.T) - cov) <= 0.03 * scale)
        assert np.allclose(precision_mean(loc, prec), cov @ loc, atol=1e-12)

    def test_tridiagonal_matches_dense(self):
        rng = make_rng(13)
        T = 50
        diag = 2.0 + rng.uniform(size=T)
        off = -0.9 * rng.uniform(size=T - 1)
        dense = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        loc = rng.standard_normal(T)
        assert np.allclose(precision_mean(loc, (diag, off)), np.linalg.solve(dense, loc), atol=1e-8)
        # same innovations through both factorizations (U'U with U upper bidiagonal)
        z = rng.standard_normal(T)
        a = sample_mvn_precision(loc, (diag, off), z=z)
        b = sample_mvn_precision(loc, dense, z=z)
        assert np.allclose(a, b, atol=1e-8)
        Z = rng.standard_normal((N_DRAWS, T))
        X = np.array([sample_mvn_precision(loc, (diag, off), z=zi) for zi in Z])
        cov = np.linalg.inv(dense)
        scale = np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
        assert np.all(np.abs(np.cov(X.T) - cov) <= 0.03 * scale)

    def test_not_spd(self):
        with pytest.raises(NotPositiveDefiniteError):
            sample_mvn_precision(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), make_rng(0))
        with pytest.raises(NotPositiveDefiniteError):
            sample_mvn_precision(np.zeros(3), (np.array([1.0, -1.0, 1.0]), np.zeros(2)), make_rng(0))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tvisvar.config import ModelConfig
from tvisvar.patterns import build_patterns
from tvisvar.rng import make_rng
from tvisvar.simulation import grid_density_oracle
from tvisvar.state import init_state
from tvisvar.data import prepare_dataset
from tvisvar.structural import (
    RowPosteriorContext,
    SingularRowError,
    normalize_signs,
    row_log_kernel,
    row_log_marginal,
    sample_b_hyperparams,
    sample_structural_row,
    sample_tvi_indicator,
)


def n2_context(T_m=6, seed=0, n=1):
    rng = make_rng(seed)
    e = rng.standard_normal((T_m, 2)) @ np.array([[1.0, 0.4], [0.0, 0.7]])
    omega_inv = np.eye(2) / 2.0 + e.T @ e
    B = np.array([[1.2, 0.0], [0.0, 1.0]])
    return RowPosteriorContext(m=0, n=n, T_m=T_m, omega_inv=omega_inv, B=B, gamma=2.0)


def marginal_cdf(pmf, grid, axis):
    g = np.asarray(grid)
    h = g[1] - g[0]
    p = pmf.sum(axis=1 - axis) if pmf.ndim == 2 else pmf
    edges = np.concatenate([[g[0] - h / 2], g + h / 2])
    c = np.concatenate([[0.0], np.cumsum(p)])
    return lambda x: np.interp(x, edges, c)


def ks(sample, cdf):
    x = np.sort(sample)
    F = cdf(x)
    n = x.size
    return max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))


class TestRowSampler:
    def test_empty_regime_is_prior(self):
        ctx = RowPosteriorContext(m=0, n=2, T_m=0, omega_inv=np.eye(3) / 3.0, B=np.eye(3), gamma=3.0)
        V = np.eye(3)
        rng = make_rng(1)
        draws = np.array([sample_structural_row(ctx, V, rng) for _ in range(40_000)])
        assert np.allclose(draws.var(axis=0), 3.0, rtol=0.03)
        assert np.allclose(draws.mean(axis=0), 0.0, atol=0.03)

    def test_density_even(self):
        ctx = n2_context()
        V = np.eye(2)
        for b in make_rng(2).standard_normal((10, 2)):
            assert row_log_kernel(b, ctx, V) == pytest.approx(row_log_kernel(-b, ctx, V), abs=1e-12)

    def test_grid_oracle_two_free(self):
        ctx = n2_context(T_m=6)
        V = np.eye(2)
        half = 8.0 * np.sqrt((ctx.T_m + 1) * np.diag(np.linalg.inv(ctx.omega_inv)))
        g1 = np.linspace(-half[0], half[0], 801)
        g2 = np.linspace(-half[1], half[1], 801)

        def logd(b1, b2):
            quad = ctx.omega_inv[0, 0] * b1**2 + 2 * ctx.omega_inv[0, 1] * b1 * b2 + ctx.omega_inv[1, 1] * b2**2
            with np.errstate(divide="ignore"):
                return ctx.T_m * np.log(np.abs(1.2 * b2)) - 0.5 * quad

        pmf = grid_density_oracle(logd, (g1, g2))
        rng = make_rng(3)
        draws = np.array([sample_structural_row(ctx, V, rng) for _ in range(100_000)])
        assert ks(draws[:, 0], marginal_cdf(pmf, g1, 0)) < 0.02
        assert ks(draws[:, 1], marginal_cdf(pmf, g2, 1)) < 0.02
        # sign symmetry of the sampled coefficient that enters det(B)
        assert abs(np.mean(draws[:, 1] > 0) - 0.5) < 0.01

    def test_grid_oracle_one_free(self):
        ctx = n2_context(T_m=4, n=0)
        V = np.eye(2)[:1]
        s11 = ctx.omega_inv[0, 0]
        half = 8.0 * np.sqrt((ctx.T_m + 1) / s11)
        g = np.linspace(-half, half, 3001)
        with np.errstate(divide="ignore"):
            pmf = grid_density_oracle(lambda b: 4 * np.log(np.abs(b)) - 0.5 * s11 * b * b, g)
        rng = make_rng(4)
        draws = np.array([sample_structural_row(ctx, V, rng)[0] for _ in range(100_000)])
        assert ks(draws, marginal_cdf(pmf, g, 0)) < 0.02

    def test_marginal_matches_quadrature(self):
        ctx = n2_context(T_m=3)
        V = np.eye(2)
        half = 8.0 * np.sqrt((ctx.T_m + 1) * np.max(np.diag(np.linalg.inv(ctx.omega_inv))))
        g = np.linspace(-half, half, 1201)
        b1, b2 = np.meshgrid(g, g, indexing="ij")
        kern = np.vectorize(lambda x, y: row_log_kernel(np.array([x, y]), ctx, V))(b1, b2)
        logint = np.log(np.exp(kern).sum() * (g[1] - g[0]) ** 2)
        expected = logint - math.log(2 * math.pi * ctx.gamma)
        assert row_log_marginal(ctx, V) == pytest.approx(expected, abs=1e-6)

    def test_singular_other_rows(self):
        ctx = RowPosteriorContext(m=0, n=2, T_m=3, omega_inv=np.eye(3), B=np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 0, 1.0]]), gamma=1.0)
        with pytest.raises(SingularRowError):
            sample_structural_row(ctx, np.eye(3), make_rng(0))


def tvi_setup(patterns, T=30, M=2):
    cfg = ModelConfig(n_vars=3, lags=1, n_regimes=M, tvi_equation=2, patterns=patterns)
    pats = build_patterns(cfg)
    data = prepare_dataset(make_rng(9).standard_normal((T + 1, 3)), lags=1)
    state = init_state(cfg, pats, data, 0)
    return cfg, pats, data, state


class TestIndicator:
    def test_single_pattern(self):
        cfg, pats, data, state = tvi_setup({"only": [1, 1, 0]})
        for i in range(20):
            k, b, prob = sample_tvi_indicator(1, 0, state, pats, data, make_rng(i))
            assert k == 0 and prob[0] == 1.0 and b.shape == (2,)

    def test_identical_patterns(self):
        cfg, pats, data, state = tvi_setup({"a": [1, 1, 0], "b": [1, 1, 0]})
        rng = make_rng(1)
        ks_ = [sample_tvi_indicator(1, 0, state, pats, data, rng)[0] for _ in range(4000)]
        assert abs(np.mean(ks_) - 0.5) < 0.03

    def test_probabilities_sum_to_one(self):
        cfg, pats, data, state = tvi_setup({"a": [1, 1, 0], "b": [0, 1, 1], "c": [1, 1, 1]})
        _, _, prob = sample_tvi_indicator(1, 1, state, pats, data, make_rng(2))
        assert prob.sum() == pytest.approx(1.0) and np.all(prob >= 0)


class TestHyperparameters:
    def test_gamma_zero_rows(self):
        cfg, pats, data, state = tvi_setup({"a": [1, 1, 0]}, M=1)
        state.B[:] = 0.0  # b = 0 everywhere
        rng = make_rng(3)
        s_B = state.s_B.copy()
        draws = []
        for _ in range(20_000):
            state.s_B[:] = s_B
            sample_b_hyperparams(state, pats, cfg, rng)
            draws.append(state.gamma_B.copy())
        draws = np.array(draws)
        r = np.array([1, 2, 3])
        expected = s_B / (cfg.priors.nu_B + r - 2)
        assert np.allclose(draws.mean(axis=0), expected, rtol=0.03)

    def test_global_scale_shape(self):
        cfg = ModelConfig(n_vars=6, lags=1, n_regimes=1)
        pats = build_patterns(cfg)
        data = prepare_dataset(make_rng(0).standard_normal((30, 6)), lags=1)
        state = init_state(cfg, pats, data, 0)
        pr = cfg.priors
        shape = pr.nu_s_B + 2 * 6 * pr.nu_gamma_B
        assert shape == 121
        rng = make_rng(5)
        vals = []
        for _ in range(20_000):
            s_B = state.s_B.copy()
            sample_b_hyperparams(state, pats, cfg, rng)
            vals.append(state.s_gamma_B * (shape - 2) / (pr.s_s_B + 2 * state.s_B.sum()))
            state.s_B[:] = s_B
        assert abs(np.mean(vals) - 1.0) < 0.02

    def test_hierarchy_stationary(self):
        # chain on (gamma, s, s_gamma) given fixed rows versus a joint-prior Monte Carlo
        cfg, pats, data, state = tvi_setup({"a": [1, 1, 0]}, M=1)
        pr = cfg.priors
        state.B[0] = np.array([[0.5, 0, 0], [0.2, -0.7, 0], [0.1, 0.3, 0.9]])
        rng = make_rng(6)
        g = []
        for it in range(30_000):
            sample_b_hyperparams(state, pats, cfg, rng)
            if it >= 2000:
                g.append(state.gamma_B[2])
        # self-normalised importance sampling from the joint prior of the hierarchy,
        # weighted by prod_n N(b_n; 0, gamma_n I_{r_n}); compare posterior medians
        S = 400_000
        s_g = pr.s_s_B / rng.chisquare(pr.nu_s_B, S)
        logw = np.zeros(S)
        gam = np.empty((3, S))
        for n in range(3):
            s_B = rng.gamma(pr.nu_gamma_B, s_g)
            gam[n] = s_B / rng.chisquare(pr.nu_B, S)
            bb = float(state.B[0, n] @ state.B[0, n])
            logw += -0.5 * (n + 1) * np.log(gam[n]) - 0.5 * bb / gam[n]
        w = np.exp(logw - logw.max())
        order = np.argsort(gam[2])
        cdf = np.cumsum(w[order]) / w.sum()
        ref = gam[2][order][np.searchsorted(cdf, 0.5)]
        assert abs(np.median(g) / ref - 1) < 0.05


class TestNormalizeSigns:
    def test_minus_identity(self):
        out, flagged = normalize_signs(-np.eye(3))
        assert np.array_equal(out, np.eye(3)) and not flagged.any()

    def test_zero_diagonal_flagged(self):
        B = np.array([[0.0, -2.0], [1.0, -1.0]])
        out, flagged = normalize_signs(B)
        assert flagged.tolist() == [True, False]
        assert np.array_equal(out, np.array([[0.0, 2.0], [-1.0, 1.0]]))

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)))
    def test_properties(self, B):
        out, flagged = normalize_signs(B)
        diag = np.diagonal(out, axis1=-2, axis2=-1)
        assert np.all((diag > 0) | flagged)
        again, _ = normalize_signs(out)
        assert np.array_equal(again, out)
        assert np.allclose(np.einsum("mji,mjk->mik", out, out), np.einsum("mji,mjk->mik", B, B))
        assert np.allclose(np.abs(np.linalg.det(out)), np.abs(np.linalg.det(B)))

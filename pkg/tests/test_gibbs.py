import numpy as np
import pytest

from conftest import small_config
from tvisvar import gibbs
from tvisvar.config import ModelConfig
from tvisvar.gibbs import SamplerError, run_gibbs
from tvisvar.markov import forward_filter
from tvisvar.patterns import build_patterns
from tvisvar.rng import make_rng
from tvisvar.state import check_invariants, init_state, regime_log_densities
from tvisvar.structural import row_context, row_log_marginal


def test_storage_count(small_problem):
    _, data, _, _, pats = small_problem
    cfg = small_config(iterations=100, burnin=50, thin=5)
    arc = run_gibbs(cfg, pats, data)
    assert len(arc) == 10 and arc.manifest["n_draws"] == 10
    assert arc.manifest["config_hash"] == cfg.digest()


def test_archive_states_valid(small_archive, small_problem):
    pats = small_problem[4]
    for i in range(len(small_archive)):
        check_invariants(small_archive.state(i), pats)


def test_reproducible(small_problem, small_archive):
    _, data, _, cfg, pats = small_problem
    again = run_gibbs(cfg, pats, data)
    for k, v in small_archive.draws.items():
        assert v.tobytes() == again.draws[k].tobytes()
    other = run_gibbs(cfg, pats, data, seed=cfg.mcmc.seed + 1)
    assert not np.array_equal(other.B, small_archive.B)


def test_degenerate_single_regime(small_problem):
    _, data, _, _, _ = small_problem
    cfg = ModelConfig(n_vars=3, lags=1, n_regimes=1, mcmc={"iterations": 30, "burnin": 10, "seed": 1})
    arc = run_gibbs(cfg, build_patterns(cfg), data)
    assert np.all(arc.s == 0) and np.all(arc.kappa == 0) and np.all(arc.P == 1.0)


def test_homoskedastic_volatility_is_one(small_problem):
    _, data, _, _, _ = small_problem
    cfg = small_config(iterations=20, burnin=10, heteroskedastic=False)
    arc = run_gibbs(cfg, build_patterns(cfg), data)
    assert np.all(arc.omega == 0.0)
    assert np.all(arc.state(0).sigma2() == 1.0)


def test_volatility_standardised(small_archive):
    sig = np.mean([small_archive.state(i).sigma2().mean() for i in range(len(small_archive))])
    assert 0.5 <= sig <= 2.0


def test_failure_reports_block(small_problem, monkeypatch):
    _, data, _, cfg, pats = small_problem

    def boom(*a, **k):
        raise np.linalg.LinAlgError("synthetic")

    monkeypatch.setattr(gibbs, "sample_a_block", boom)
    with pytest.raises(SamplerError) as err:
        run_gibbs(cfg, pats, data)
    assert err.value.iteration == 0 and err.value.block == "autoregressive"


def relabel(state, perm):
    """Regime m of the new state is regime perm[m] of the old one."""
    out = state.copy()
    inv = np.argsort(perm)
    out.B = state.B[perm]
    out.kappa = state.kappa[perm]
    out.omega = state.omega[:, perm]
    out.P = state.P[np.ix_(perm, perm)]
    out.pi0 = state.pi0[perm]
    out.s = inv[state.s]
    return out


def test_label_permutation_equivariance(small_problem):
    _, data, _, cfg, pats = small_problem
    st = init_state(cfg, pats, data, 0)
    st.B[1] = st.B[1] * 1.7
    st.omega[:, 1] = 0.4
    st.P = np.array([[0.9, 0.1], [0.3, 0.7]])
    st.pi0 = np.array([0.2, 0.8])
    st.h = make_rng(1).standard_normal(st.h.shape)
    perm = np.array([1, 0])
    pst = relabel(st, perm)
    d, pd = regime_log_densities(st, data), regime_log_densities(pst, data)
    assert np.allclose(pd, d[:, perm], atol=1e-12)
    f, pf = forward_filter(d, st.P, st.pi0), forward_filter(pd, pst.P, pst.pi0)
    assert np.allclose(pf, f[:, perm], atol=1e-12)
    eps, sig = st.residuals(data), st.sigma2()
    for n in range(3):
        for m in range(2):
            a = row_log_marginal(row_context(n, m, st, eps, sig), pats.V(n, m, 0))
            b = row_log_marginal(row_context(n, int(np.argsort(perm)[m]), pst, eps, pst.sigma2()), pats.V(n, m, 0))
            assert a == pytest.approx(b, abs=1e-10)

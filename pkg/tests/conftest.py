import numpy as np
import pytest
from scipy import stats

from tvisvar.config import McmcControls, ModelConfig
from tvisvar.patterns import build_patterns
from tvisvar.simulation import DgpSpec, simulate


def ks_distance(sample, cdf) -> float:
    return float(stats.kstest(np.asarray(sample), cdf).statistic)


def small_spec(T=120, seed=11, omega=0.6):
    N = 3
    A = np.hstack([0.4 * np.eye(N), 0.1 * np.ones((N, 1))])
    B1 = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.3, 0.2, 1.0]])
    B2 = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, -0.6], [0.3, 0.2, 1.0]])
    return DgpSpec(
        A=A,
        B=np.stack([B1, B2]),
        P=[[0.95, 0.05], [0.05, 0.95]],
        pi0=[0.5, 0.5],
        rho=[0.9, 0.9, 0.9],
        omega=np.full((N, 2), omega),
        T=T,
        kappa=[0, 1],
        seed=seed,
    )


def small_config(iterations=40, burnin=20, thin=1, seed=3, **kw):
    return ModelConfig(
        n_vars=3,
        lags=1,
        n_regimes=kw.pop("n_regimes", 2),
        tvi_equation=2,
        patterns=kw.pop("patterns", {"k1": [1, 1, 0], "k2": [0, 1, 1]}),
        mcmc=McmcControls(iterations=iterations, burnin=burnin, thin=thin, seed=seed),
        **kw,
    )


@pytest.fixture(scope="session")
def small_problem():
    spec = small_spec()
    data, truth = simulate(spec)
    cfg = small_config()
    return spec, data, truth, cfg, build_patterns(cfg)


@pytest.fixture(scope="session")
def small_archive(small_problem):
    from tvisvar.gibbs import run_gibbs

    _, data, _, cfg, pats = small_problem
    return run_gibbs(cfg, pats, data)

"""Row-by-row conjugate draws of the autoregressive matrix A and its shrinkage."""

from __future__ import annotations

import numpy as np

from .config import ModelConfig
from .data import Dataset
from .rng import NotPositiveDefiniteError, sample_gamma, sample_ig2, sample_mvn_precision
from .state import ParameterState, minnesota_prior

__all__ = ["MinnesotaPrior", "a_row_posterior", "sample_a_row", "sample_a_block", "sample_a_hyperparams"]


class MinnesotaPrior:
    """Prior mean rows and diagonal prior scale of A (before the gamma_A multiplier)."""

    def __init__(self, config: ModelConfig):
        self.mean, self.scale = minnesota_prior(config)

    @property
    def precision_diag(self) -> np.ndarray:
        return 1.0 / self.scale


def a_row_posterior(n: int, state: ParameterState, data: Dataset, prior: MinnesotaPrior, sigma2=None):
    """Precision and location of the Gaussian full conditional of row n of A.

    Uses the transformed regression ``z_t = B_{s_t}(y_t - A_{n=0} x_t)
    = B_{s_t}[:, n] x_t' a_n + u_t``.
    """
    if sigma2 is None:
        sigma2 = state.sigma2()
    A0 = state.A.copy()
    A0[n] = 0.0
    Bt = state.B[state.s]  # (T, N, N)
    z = np.einsum("tij,tj->ti", Bt, data.Y - data.X @ A0.T)
    col = Bt[:, :, n]  # (T, N)
    inv_s2 = 1.0 / sigma2.T  # (T, N)
    weight = np.sum(col**2 * inv_s2, axis=1)
    target = np.sum(col * z * inv_s2, axis=1)
    prior_prec = prior.precision_diag / state.gamma_A[n]
    precision = (data.X * weight[:, None]).T @ data.X
    precision[np.diag_indices_from(precision)] += prior_prec
    location = prior_prec * prior.mean[n] + data.X.T @ target
    return precision, location


def sample_a_row(n: int, state: ParameterState, data: Dataset, prior: MinnesotaPrior, rng, sigma2=None) -> np.ndarray:
    precision, location = a_row_posterior(n, state, data, prior, sigma2)
    try:
        return sample_mvn_precision(location, precision, rng)
    except NotPositiveDefiniteError:
        raise NotPositiveDefiniteError(f"autoregressive row {n}: posterior precision is not positive definite") from None


def sample_a_block(state: ParameterState, config: ModelConfig, data: Dataset, prior: MinnesotaPrior, rng) -> None:
    sigma2 = state.sigma2()
    for n in range(config.n_vars):
        state.A[n] = sample_a_row(n, state, data, prior, rng, sigma2)
    sample_a_hyperparams(state, config, prior, rng)


def sample_a_hyperparams(state: ParameterState, config: ModelConfig, prior: MinnesotaPrior, rng) -> None:
    pr = config.priors
    N, K = state.A.shape
    dev = state.A - prior.mean
    quad = np.sum(dev**2 * prior.precision_diag, axis=1)
    for n in range(N):
        state.gamma_A[n] = sample_ig2(state.s_A[n] + quad[n], pr.nu_A + K, rng)
        scale = 1.0 / (1.0 / state.s_gamma_A + 1.0 / (2.0 * state.gamma_A[n]))
        state.s_A[n] = sample_gamma(scale, pr.nu_gamma_A + 0.5 * pr.nu_A, rng)
    state.s_gamma_A = float(sample_ig2(pr.s_s_A + 2.0 * state.s_A.sum(), pr.nu_s_A + 2 * N * pr.nu_gamma_A, rng))

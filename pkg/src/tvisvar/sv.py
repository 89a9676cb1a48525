"""Stochastic-volatility block: auxiliary mixture, log-volatility smoother,
regime-specific volatility-of-volatility, persistence and the interweaving step.

The n-th structural shock is ``u_{n,t} = exp(omega_n(s_t) h_{n,t} / 2) z_{n,t}``
with ``h_{n,t} = rho_n h_{n,t-1} + v_{n,t}``, ``h_{n,0} = 0``. Squaring and
taking logs gives ``log u^2 = omega h + log z^2``, where ``log z^2`` is
approximated by a ten-component normal mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .rng import sample_gig, sample_mvn_precision, sample_truncated_normal
from .state import ParameterState

__all__ = [
    "OmoriMixture",
    "MIXTURE",
    "log_squared_shocks",
    "mixture_probabilities",
    "sample_mixture_indicators",
    "log_volatility_precision",
    "sample_log_volatilities",
    "omega_posterior",
    "sample_omega",
    "sample_rho",
    "sigma_omega2_gig_params",
    "sample_sigma_omega2",
    "asis_interweave",
    "sample_sv_block",
]

LOG_U2_OFFSET = 1e-10


@dataclass(frozen=True)
class OmoriMixture:
    """Ten-component normal mixture for log chi-square(1)."""

    prob: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    @property
    def n_components(self) -> int:
        return self.prob.shape[0]

    def moments(self) -> tuple[float, float]:
        mu = float(self.prob @ self.mean)
        return mu, float(self.prob @ (self.var + self.mean**2) - mu**2)

    def cdf(self, x):
        from scipy.stats import norm

        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(self.prob * norm.cdf((x - self.mean) / np.sqrt(self.var)), axis=-1)


MIXTURE = OmoriMixture(
    prob=np.array([0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115]),
    mean=np.array([1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000]),
    var=np.array([0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342]),
)
_LOG_PROB = np.log(MIXTURE.prob)
_LOG_VAR = np.log(MIXTURE.var)


def log_squared_shocks(u: np.ndarray) -> np.ndarray:
    return np.log(u**2 + LOG_U2_OFFSET)


# ---------------------------------------------------------------------------
# mixture indicators
# ---------------------------------------------------------------------------


def mixture_probabilities(u_tilde: np.ndarray, mean_shift: np.ndarray) -> np.ndarray:
    """(T, 10) posterior component probabilities given ``log u^2`` and ``omega h``."""
    r = (u_tilde - mean_shift)[:, None] - MIXTURE.mean
    logp = _LOG_PROB - 0.5 * _LOG_VAR - 0.5 * r**2 / MIXTURE.var
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    return p / p.sum(axis=1, keepdims=True)


def sample_mixture_indicators(n: int, state: ParameterState, u_tilde: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    prob = mixture_probabilities(u_tilde, state.omega[n, state.s] * state.h[n])
    cdf = np.cumsum(prob, axis=1)
    u = rng.uniform(size=(prob.shape[0], 1))
    return np.minimum((u * cdf[:, -1:] >= cdf).sum(axis=1), MIXTURE.n_components - 1)


# ---------------------------------------------------------------------------
# log-volatilities
# ---------------------------------------------------------------------------


def _hth(rho: float, T: int) -> tuple[np.ndarray, np.ndarray]:
    diag = np.full(T, 1.0 + rho * rho)
    diag[-1] = 1.0
    return diag, np.full(T - 1, -rho)


def log_volatility_precision(omega_t: np.ndarray, q: np.ndarray, rho: float, u_tilde: np.ndarray):
    """Tridiagonal posterior precision ``(diag, offdiag)`` and location vector of h_n."""
    inv_var = 1.0 / MIXTURE.var[q]
    diag, off = _hth(rho, omega_t.shape[0])
    diag = diag + omega_t**2 * inv_var
    loc = omega_t * inv_var * (u_tilde - MIXTURE.mean[q])
    return (diag, off), loc


def sample_log_volatilities(n: int, state: ParameterState, u_tilde: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    precision, loc = log_volatility_precision(state.omega[n, state.s], state.q[n], float(state.rho[n]), u_tilde)
    return sample_mvn_precision(loc, precision, rng)


# ---------------------------------------------------------------------------
# omega, rho, sigma^2_omega
# ---------------------------------------------------------------------------


def omega_posterior(n: int, m: int, state: ParameterState, u_tilde: np.ndarray) -> tuple[float, float]:
    """Mean and variance of the normal full conditional of omega_n(m)."""
    sel = state.s == m
    h = state.h[n, sel]
    q = state.q[n, sel]
    inv_var = 1.0 / MIXTURE.var[q]
    prec = float(np.sum(h * h * inv_var)) + 1.0 / state.sigma2_omega[n]
    loc = float(np.sum(h * inv_var * (u_tilde[sel] - MIXTURE.mean[q])))
    return loc / prec, 1.0 / prec


def sample_omega(n: int, m: int, state: ParameterState, u_tilde: np.ndarray, rng: np.random.Generator) -> float:
    mean, var = omega_posterior(n, m, state, u_tilde)
    return mean + math.sqrt(var) * rng.standard_normal()


def sample_rho(h: np.ndarray, rng: np.random.Generator) -> float:
    """Truncated-normal draw of the AR(1) persistence given h_1..h_T (h_0 = 0)."""
    lagged = h[:-1]
    denom = float(lagged @ lagged)
    if not denom > 0:
        return float(rng.uniform(-1.0, 1.0))
    mean = float(h[1:] @ lagged) / denom
    return float(sample_truncated_normal(mean, 1.0 / denom, -1.0, 1.0, rng))


def sigma_omega2_gig_params(omega_n: np.ndarray, shape: float, scale: float) -> tuple[float, float, float]:
    """(lambda, chi, psi) of the GIG full conditional of sigma^2_omega.

    With ``sigma^2 ~ G(scale, shape)`` and ``omega_n(m) | sigma^2 ~ N(0, sigma^2)``
    for m = 1..M the order is ``shape - M / 2``.
    """
    M = omega_n.shape[0]
    return shape - 0.5 * M, float(omega_n @ omega_n), 2.0 / scale


def sample_sigma_omega2(n: int, state: ParameterState, config: ModelConfig, rng: np.random.Generator) -> float:
    lam, chi, psi = sigma_omega2_gig_params(state.omega[n], config.priors.omega_shape, config.priors.omega_scale)
    if chi == 0.0 and lam <= 0:
        chi = 1e-300
    return float(sample_gig(lam, chi, psi, rng))


# ---------------------------------------------------------------------------
# interweaving
# ---------------------------------------------------------------------------


def _boundary_log_correction(omega: float, h_tilde: np.ndarray, h: np.ndarray, in_m: np.ndarray, rho: float) -> float:
    """log of the exact centred conditional over its GIG approximation.

    The GIG treats the regime-m subsequence of ``omega * h`` as a stand-alone
    AR(1); transitions into and out of regime m add these terms.
    """
    prev_in = np.concatenate([[False], in_m[:-1]])
    t_first = np.flatnonzero(in_m & ~prev_in)
    t_first = t_first[t_first > 0]
    t_after = np.flatnonzero(~in_m & prev_in)
    enter = h_tilde[t_first] / omega
    exact_in = np.sum((enter - rho * h[t_first - 1]) ** 2) - np.sum(enter**2)
    exact_out = np.sum((h[t_after] - rho * h_tilde[t_after - 1] / omega) ** 2)
    return -0.5 * (exact_in + exact_out)


def asis_interweave(n: int, m: int, state: ParameterState, rng: np.random.Generator) -> bool:
    """Redraw omega_n(m) in the centred parameterisation ``h~ = omega_n(m) h``.

    Proposes ``omega^2`` from the GIG conditional of the regime-m subsequence
    with a random sign and accepts with a Metropolis-Hastings correction for
    the regime-boundary terms, so the full conditional is left exactly
    invariant (the correction vanishes when M = 1). Returns whether the state
    changed.
    """
    omega = float(state.omega[n, m])
    if omega == 0.0:
        return False
    in_m = state.s == m
    T_m = int(in_m.sum())
    h = state.h[n]
    rho = float(state.rho[n])
    h_tilde = np.where(in_m, omega * h, 0.0)
    resid = h_tilde.copy()
    resid[1:] -= rho * np.where(in_m[:-1] & in_m[1:], h_tilde[:-1], 0.0)
    Q = float(np.sum(resid[in_m] ** 2))
    if T_m == 0:
        lam, chi = 0.5, 0.0
    else:
        lam, chi = -0.5 * (T_m - 1), Q
    psi = 1.0 / state.sigma2_omega[n]
    if chi == 0.0 and lam <= 0:
        return False
    x = float(sample_gig(lam, chi, psi, rng))
    proposal = math.sqrt(x) * (1.0 if rng.uniform() < 0.5 else -1.0)
    if proposal == 0.0:
        return False
    if T_m:
        log_ratio = _boundary_log_correction(proposal, h_tilde, h, in_m, rho) - _boundary_log_correction(
            omega, h_tilde, h, in_m, rho
        )
        if log_ratio < 0 and rng.uniform() >= math.exp(log_ratio):
            return False
        state.h[n] = np.where(in_m, h_tilde / proposal, h)
    state.omega[n, m] = proposal
    return True


def sample_sv_block(
    state: ParameterState,
    config: ModelConfig,
    u: np.ndarray,
    rng: np.random.Generator,
) -> None:
    """Update q, h, omega, rho, sigma^2_omega (and interweave) for every equation in place.

    ``u`` is the (T, N) array of structural shocks.
    """
    u_tilde_all = log_squared_shocks(u)
    N = u.shape[1]
    M = state.n_regimes
    for n in range(N):
        ut = u_tilde_all[:, n]
        state.q[n] = sample_mixture_indicators(n, state, ut, rng)
        state.h[n] = sample_log_volatilities(n, state, ut, rng)
        for m in range(M):
            state.omega[n, m] = sample_omega(n, m, state, ut, rng)
        state.rho[n] = sample_rho(state.h[n], rng)
        state.sigma2_omega[n] = sample_sigma_omega2(n, state, config, rng)
        if config.asis:
            for m in range(M):
                asis_interweave(n, m, state, rng)
            state.rho[n] = sample_rho(state.h[n], rng)

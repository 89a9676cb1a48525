"""The Gibbs state and its initialisation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from .config import ModelConfig
from .data import Dataset
from .patterns import RestrictionPatternSet
from .rng import make_rng

__all__ = [
    "ParameterState",
    "StateInvariantError",
    "init_state",
    "check_invariants",
    "log_likelihood",
    "regime_log_densities",
    "minnesota_prior",
]

LOG_2PI = float(np.log(2.0 * np.pi))
MODAL_MIXTURE_COMPONENT = 4  # largest weight in the ten-component log-chi2 mixture


class StateInvariantError(AssertionError):
    pass


@dataclass
class ParameterState:
    A: np.ndarray  # (N, Np+d)
    B: np.ndarray  # (M, N, N)
    kappa: np.ndarray  # (M, N) pattern index per regime and equation
    P: np.ndarray  # (M, M)
    pi0: np.ndarray  # (M,)
    s: np.ndarray  # (T,) regime index per period
    h: np.ndarray  # (N, T) non-centred log-volatilities
    rho: np.ndarray  # (N,)
    omega: np.ndarray  # (N, M)
    sigma2_omega: np.ndarray  # (N,)
    q: np.ndarray  # (N, T) mixture indicators, 0..9
    gamma_A: np.ndarray  # (N,)
    gamma_B: np.ndarray  # (N,)
    s_A: np.ndarray  # (N,)
    s_B: np.ndarray  # (N,)
    s_gamma_A: float
    s_gamma_B: float

    def copy(self) -> "ParameterState":
        return ParameterState(
            **{
                f.name: (getattr(self, f.name).copy() if isinstance(getattr(self, f.name), np.ndarray) else getattr(self, f.name))
                for f in fields(self)
            }
        )

    @property
    def n_regimes(self) -> int:
        return self.B.shape[0]

    def log_sigma2(self) -> np.ndarray:
        """(N, T) log conditional variances ``omega_n(s_t) * h_{n,t}``."""
        return self.omega[:, self.s] * self.h

    def sigma2(self) -> np.ndarray:
        return np.exp(self.log_sigma2())

    def residuals(self, data: Dataset) -> np.ndarray:
        """Reduced-form residuals ``y_t - A x_t`` (T x N)."""
        return data.Y - data.X @ self.A.T

    def structural_shocks(self, data: Dataset) -> np.ndarray:
        """``u_t = B_{s_t} (y_t - A x_t)`` as a (T x N) array."""
        eps = self.residuals(data)
        return np.einsum("tij,tj->ti", self.B[self.s], eps)


def minnesota_prior(config: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Prior mean rows (N x K) and the diagonal of the prior scale (K,)."""
    N, p, d = config.n_vars, config.lags, config.n_det
    mean = np.zeros((N, N * p + d))
    mean[:, :N] = np.eye(N)
    scale = np.concatenate([np.repeat(1.0 / np.arange(1, p + 1) ** 2, N), np.full(d, config.priors.deterministic_scale)])
    return mean, scale


def _ig2_center(s: float, nu: float) -> float:
    # mean when it exists, otherwise the mode
    return s / (nu - 2.0) if nu > 2 else s / (nu + 2.0)


def _initial_B(config: ModelConfig, patterns: RestrictionPatternSet, data: Dataset) -> np.ndarray:
    N = config.n_vars
    try:
        coef, *_ = np.linalg.lstsq(data.X, data.Y, rcond=None)
        resid = data.Y - data.X @ coef
        cov = resid.T @ resid / data.T
        L = np.linalg.cholesky(cov)
        B0 = np.linalg.inv(L)
        if not np.all(np.isfinite(B0)):
            raise np.linalg.LinAlgError("non-finite inverse")
    except np.linalg.LinAlgError:
        warnings.warn("least-squares initialisation failed; starting from the identity", RuntimeWarning)
        B0 = np.eye(N)
    for n in range(N):
        B0[n, ~patterns.mask(n, 0)] = 0.0
    if abs(np.linalg.det(B0)) < 1e-12:
        warnings.warn("masked least-squares structural matrix is singular; starting from the identity", RuntimeWarning)
        B0 = np.eye(N)
        for n in range(N):
            B0[n, ~patterns.mask(n, 0)] = 0.0
    return B0


def init_state(
    config: ModelConfig,
    patterns: RestrictionPatternSet,
    data: Dataset,
    seed: int | np.random.Generator | None = None,
) -> ParameterState:
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(config.mcmc.seed if seed is None else seed)
    N, M, T = config.n_vars, config.n_regimes, data.T
    pr = config.priors

    B0 = _initial_B(config, patterns, data)
    s_gamma_B = _ig2_center(pr.s_s_B, pr.nu_s_B)
    s_B = np.full(N, s_gamma_B * pr.nu_gamma_B)
    gamma_B = np.array([_ig2_center(v, pr.nu_B) for v in s_B])
    s_gamma_A = _ig2_center(pr.s_s_A, pr.nu_s_A)
    s_A = np.full(N, s_gamma_A * pr.nu_gamma_A)
    gamma_A = np.array([_ig2_center(v, pr.nu_A) for v in s_A])

    prior_mean, _ = minnesota_prior(config)
    d = pr.persistence(M)
    P = np.ones((M, M)) + np.diag(d)
    P /= P.sum(axis=1, keepdims=True)

    state = ParameterState(
        A=prior_mean.copy(),
        B=np.repeat(B0[None], M, axis=0),
        kappa=np.zeros((M, N), dtype=np.int64),
        P=P,
        pi0=np.full(M, 1.0 / M),
        s=rng.integers(0, M, size=T).astype(np.int64),
        h=np.zeros((N, T)),
        rho=np.full(N, 0.5),
        omega=np.full((N, M), 0.1 if config.heteroskedastic else 0.0),
        sigma2_omega=np.full(N, pr.omega_shape * pr.omega_scale),
        q=np.full((N, T), MODAL_MIXTURE_COMPONENT, dtype=np.int64),
        gamma_A=gamma_A,
        gamma_B=gamma_B,
        s_A=s_A,
        s_B=s_B,
        s_gamma_A=float(s_gamma_A),
        s_gamma_B=float(s_gamma_B),
    )
    check_invariants(state, patterns)
    return state


def check_invariants(state: ParameterState, patterns: RestrictionPatternSet, atol: float = 1e-10) -> None:
    M = state.n_regimes
    for m in range(M):
        if not patterns.conforms(state.B[m], state.kappa[m]):
            raise StateInvariantError(f"B[{m}] does not conform to its restriction pattern")
        if not abs(np.linalg.det(state.B[m])) > 0:
            raise StateInvariantError(f"B[{m}] is singular")
    if np.any(state.P < 0) or not np.allclose(state.P.sum(axis=1), 1.0, atol=atol):
        raise StateInvariantError("transition matrix rows must lie on the simplex")
    if np.any(state.pi0 < 0) or abs(state.pi0.sum() - 1.0) > atol:
        raise StateInvariantError("initial regime probabilities must lie on the simplex")
    if np.any(np.abs(state.rho) >= 1):
        raise StateInvariantError("log-volatility persistence must satisfy |rho| < 1")
    if np.any(state.s < 0) or np.any(state.s >= M):
        raise StateInvariantError("regime indices out of range")
    for name in ("gamma_A", "gamma_B", "s_A", "s_B", "sigma2_omega"):
        if not np.all(getattr(state, name) > 0):
            raise StateInvariantError(f"{name} must be positive")
    if not (state.s_gamma_A > 0 and state.s_gamma_B > 0):
        raise StateInvariantError("global shrinkage scales must be positive")
    if not np.all(np.isfinite(state.h)):
        raise StateInvariantError("log-volatilities must be finite")


def regime_log_densities(state: ParameterState, data: Dataset, eps: np.ndarray | None = None) -> np.ndarray:
    """(T, M) log densities of y_t given regime m and everything else."""
    if eps is None:
        eps = state.residuals(data)
    M = state.n_regimes
    N = eps.shape[1]
    out = np.empty((eps.shape[0], M))
    for m in range(M):
        _, logdet = np.linalg.slogdet(state.B[m])
        u = eps @ state.B[m].T
        lv = state.omega[:, m][:, None] * state.h  # (N, T)
        out[:, m] = logdet - 0.5 * N * LOG_2PI - 0.5 * lv.sum(axis=0) - 0.5 * np.sum(u.T**2 * np.exp(-lv), axis=0)
    return out


def log_likelihood(state: ParameterState, data: Dataset) -> float:
    """Conditional Gaussian log-likelihood given the regime path and volatilities."""
    dens = regime_log_densities(state, data)
    return float(dens[np.arange(data.T), state.s].sum())

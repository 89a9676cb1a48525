"""Regime path (forward filtering, backward sampling) and Dirichlet updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .data import Dataset
from .rng import sample_dirichlet
from .state import ParameterState, regime_log_densities

__all__ = [
    "RegimePath",
    "RegimeFilterError",
    "forward_filter",
    "backward_sample",
    "ffbs",
    "sample_transition_matrix",
    "sample_initial_probs",
    "sample_markov_block",
]


class RegimeFilterError(FloatingPointError):
    pass


@dataclass(frozen=True)
class RegimePath:
    s: np.ndarray
    n_regimes: int

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.s, minlength=self.n_regimes)

    @property
    def transitions(self) -> np.ndarray:
        out = np.zeros((self.n_regimes, self.n_regimes), dtype=np.int64)
        np.add.at(out, (self.s[:-1], self.s[1:]), 1)
        return out


def forward_filter(log_dens: np.ndarray, P: np.ndarray, pi0: np.ndarray) -> np.ndarray:
    """Filtered probabilities Pr[s_t = m | y_1..y_t] as a (T, M) array; pi0 is the law of s_1."""
    T, M = log_dens.shape
    bad = np.flatnonzero(~np.any(np.isfinite(log_dens), axis=1))
    if bad.size:
        raise RegimeFilterError(f"all regime densities are -inf at t={int(bad[0])}")
    lik = np.exp(log_dens - log_dens.max(axis=1, keepdims=True))
    filt = np.empty((T, M))
    pred = np.asarray(pi0, dtype=float)
    PT = P.T.copy()
    for t in range(T):
        f = pred * lik[t]
        tot = f.sum()
        if not tot > 0:
            raise RegimeFilterError(f"filtered probabilities vanish at t={t}")
        f /= tot
        filt[t] = f
        pred = PT @ f
    return filt


def backward_sample(filt: np.ndarray, P: np.ndarray, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw s_{1:T} from the smoothed joint given filtered probabilities.

    With ``size`` set, returns ``size`` independent paths as a (size, T) array.
    """
    T, M = filt.shape
    S = 1 if size is None else size
    u = rng.uniform(size=(T, S))
    paths = np.empty((S, T), dtype=np.int64)
    cdf = np.cumsum(filt[-1])
    paths[:, -1] = np.minimum(np.searchsorted(cdf / cdf[-1], u[-1], side="right"), M - 1)
    for t in range(T - 2, -1, -1):
        w = filt[t][None, :] * P[:, paths[:, t + 1]].T  # (S, M)
        cdf = np.cumsum(w, axis=1)
        draw = (u[t][:, None] * cdf[:, -1:] >= cdf).sum(axis=1)
        paths[:, t] = np.minimum(draw, M - 1)
    return paths[0] if size is None else paths


def ffbs(state: ParameterState, data: Dataset, rng: np.random.Generator, log_dens: np.ndarray | None = None) -> RegimePath:
    M = state.n_regimes
    if M == 1:
        return RegimePath(np.zeros(data.T, dtype=np.int64), 1)
    if log_dens is None:
        log_dens = regime_log_densities(state, data)
    filt = forward_filter(log_dens, state.P, state.pi0)
    return RegimePath(backward_sample(filt, state.P, rng), M)


def sample_transition_matrix(path: RegimePath, config: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    M = path.n_regimes
    d = np.asarray(config.priors.persistence(M))
    n = path.transitions
    P = np.empty((M, M))
    for m in range(M):
        alpha = np.ones(M) + n[m]
        alpha[m] += d[m]
        P[m] = sample_dirichlet(alpha, rng)
    return P


def sample_initial_probs(path: RegimePath, rng: np.random.Generator) -> np.ndarray:
    alpha = np.ones(path.n_regimes)
    alpha[path.s[0]] += 1.0
    return sample_dirichlet(alpha, rng)


def sample_markov_block(state: ParameterState, config: ModelConfig, data: Dataset, rng: np.random.Generator) -> None:
    path = ffbs(state, data, rng)
    state.s = path.s
    if state.n_regimes > 1:
        state.P = sample_transition_matrix(path, config, rng)
        state.pi0 = sample_initial_probs(path, rng)

"""Data-generating process and brute-force oracles used for validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import Dataset, prepare_dataset
from .rng import make_rng

__all__ = [
    "DgpSpec",
    "SimulationTruth",
    "simulate",
    "companion_matrix",
    "brute_force_path_posterior",
    "grid_density_oracle",
    "CoverageError",
]


class CoverageError(ValueError):
    """The grid does not cover (almost) all the probability mass."""


def companion_matrix(A: np.ndarray, lags: int) -> np.ndarray:
    N = A.shape[0]
    C = np.zeros((N * lags, N * lags))
    C[:N] = A[:, : N * lags]
    if lags > 1:
        C[N:, :-N] = np.eye(N * (lags - 1))
    return C


@dataclass
class DgpSpec:
    A: np.ndarray  # (N, Np + d)
    B: np.ndarray  # (M, N, N)
    P: np.ndarray
    pi0: np.ndarray
    rho: np.ndarray
    omega: np.ndarray  # (N, M)
    T: int
    lags: int = 1
    n_det: int = 1
    kappa: np.ndarray | None = None  # (M,) true pattern of the TVI equation, 0-based
    seed: int = 0

    def __post_init__(self):
        for name in ("A", "B", "P", "pi0", "rho", "omega"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.kappa is not None:
            self.kappa = np.asarray(self.kappa, dtype=np.int64)
        M, N, _ = self.B.shape
        if self.A.shape != (N, N * self.lags + self.n_det):
            raise ValueError(f"A has shape {self.A.shape}, expected {(N, N * self.lags + self.n_det)}")
        if self.P.shape != (M, M) or np.any(self.P < 0) or not np.allclose(self.P.sum(axis=1), 1):
            raise ValueError("P must be an M x M stochastic matrix")
        if self.pi0.shape != (M,) or not np.isclose(self.pi0.sum(), 1):
            raise ValueError("pi0 must be a probability vector of length M")
        if np.any(np.abs(self.rho) >= 1):
            raise ValueError("|rho| must be < 1")
        if self.omega.shape != (N, M):
            raise ValueError(f"omega must have shape {(N, M)}")
        for m in range(M):
            if abs(np.linalg.det(self.B[m])) < 1e-12:
                raise ValueError(f"B[{m}] is singular")
        radius = np.max(np.abs(np.linalg.eigvals(companion_matrix(self.A, self.lags))))
        if radius >= 1:
            raise ValueError(f"VAR is not stationary (spectral radius {radius:.4f})")

    def to_dict(self) -> dict:
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "DgpSpec":
        return cls(**raw)


@dataclass
class SimulationTruth:
    s: np.ndarray  # (T,)
    h: np.ndarray  # (N, T)
    u: np.ndarray  # (T, N) structural shocks
    z: np.ndarray  # (T, N) standardised shocks


def simulate(spec: DgpSpec, rng: np.random.Generator | None = None) -> tuple[Dataset, SimulationTruth]:
    """Forward-simulate the switching SVAR with stochastic volatility.

    The presample (p observations) is zero; the returned dataset holds the
    T observations that follow it.
    """
    rng = make_rng(spec.seed) if rng is None else rng
    M, N, _ = spec.B.shape
    T, p = spec.T, spec.lags
    s = np.empty(T, dtype=np.int64)
    s[0] = rng.choice(M, p=spec.pi0)
    for t in range(1, T):
        s[t] = rng.choice(M, p=spec.P[s[t - 1]])
    v = rng.standard_normal((N, T))
    h = np.empty((N, T))
    prev = np.zeros(N)
    for t in range(T):
        prev = spec.rho * prev + v[:, t]
        h[:, t] = prev
    z = rng.standard_normal((T, N))
    u = np.exp(0.5 * spec.omega[:, s] * h).T * z
    Binv = np.linalg.inv(spec.B)
    Y = np.zeros((T + p, N))
    for t in range(T):
        x = np.concatenate([Y[p + t - l] for l in range(1, p + 1)] + ([np.ones(spec.n_det)] if spec.n_det else []))
        Y[p + t] = spec.A @ x + Binv[s[t]] @ u[t]
    data = prepare_dataset(Y, p, spec.n_det)
    return data, SimulationTruth(s=s, h=h, u=u, z=z)


def brute_force_path_posterior(densities: np.ndarray, P: np.ndarray, pi0: np.ndarray, log: bool = False) -> np.ndarray:
    """Exact Pr[s_t = m | data] by enumerating all M^T regime paths (T <= 12)."""
    dens = np.asarray(densities, dtype=float)
    T, M = dens.shape
    if T > 12:
        raise ValueError(f"path enumeration needs T <= 12, got {T}")
    logd = dens if log else np.log(dens)
    logP = np.log(P)
    logpi = np.log(pi0)
    paths = np.array(list(itertools.product(range(M), repeat=T)))
    w = logpi[paths[:, 0]] + logd[np.arange(T), paths].sum(axis=1)
    if T > 1:
        w += logP[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    w = np.exp(w - w.max())
    w /= w.sum()
    out = np.zeros((T, M))
    for m in range(M):
        out[:, m] = ((paths == m) * w[:, None]).sum(axis=0)
    return out


def grid_density_oracle(log_density, grid, edge_tol: float = 1e-7):
    """Normalised cell masses of a 1-D or 2-D density on an evenly spaced grid.

    ``grid`` is an array of cell midpoints (1-D) or a pair of such arrays
    (2-D, ``log_density`` evaluated on the meshgrid with ``indexing="ij"``
    and given two broadcastable arrays). Raises :class:`CoverageError` when
    the boundary cells carry more than ``edge_tol`` of the mass.
    """
    if isinstance(grid, tuple):
        g1, g2 = (np.asarray(g, dtype=float) for g in grid)
        X1, X2 = np.meshgrid(g1, g2, indexing="ij")
        logd = np.asarray(log_density(X1, X2), dtype=float)
        area = (g1[1] - g1[0]) * (g2[1] - g2[0])
        edge = np.zeros_like(logd, dtype=bool)
        edge[[0, -1], :] = True
        edge[:, [0, -1]] = True
    else:
        g = np.asarray(grid, dtype=float)
        logd = np.asarray(log_density(g), dtype=float)
        area = g[1] - g[0]
        edge = np.zeros_like(logd, dtype=bool)
        edge[[0, -1]] = True
    logd = np.where(np.isfinite(logd), logd, -np.inf)
    w = np.exp(logd - logd.max()) * area
    pmf = w / w.sum()
    if pmf[edge].sum() > edge_tol:
        raise CoverageError(f"grid boundary carries {pmf[edge].sum():.2e} of the mass")
    return pmf

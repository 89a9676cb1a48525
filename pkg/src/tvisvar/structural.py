"""Structural-matrix rows, pattern indicators and their shrinkage hierarchy.

The full conditional of the free coefficients ``b`` of row ``n`` in regime
``m`` is

    p(b | ...) ∝ |det B_m|^{T_m} exp(-0.5 * b V S V' b'),
    S = gamma_{B.n}^{-1} I + sum_{t: s_t = m} eps_t eps_t' / sigma2_{n.t},

and is sampled exactly with the Waggoner-Zha construction. Because
``det B_m`` is linear in row ``n``, the normalising constant of that kernel
is available in closed form, which gives the conditional marginal likelihood
of each candidate pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .config import ModelConfig
from .data import Dataset
from .patterns import RestrictionPatternSet
from .rng import NotPositiveDefiniteError, sample_ig2, sample_gamma
from .state import ParameterState

__all__ = [
    "RowPosteriorContext",
    "SingularRowError",
    "row_context",
    "row_log_kernel",
    "row_log_marginal",
    "sample_structural_row",
    "sample_tvi_indicator",
    "sample_structural_block",
    "sample_b_hyperparams",
    "normalize_signs",
]

LOG_2PI = math.log(2.0 * math.pi)


class SingularRowError(np.linalg.LinAlgError):
    """The remaining rows of B do not span an (N-1)-dimensional space."""


@dataclass
class RowPosteriorContext:
    m: int
    n: int
    T_m: int
    omega_inv: np.ndarray  # N x N, gamma^{-1} I + weighted residual outer products
    B: np.ndarray  # current B_m; row n is ignored
    gamma: float

    def __post_init__(self):
        if self.T_m < 0:
            raise ValueError("T_m must be non-negative")


def row_context(
    n: int,
    m: int,
    state: ParameterState,
    eps: np.ndarray,
    sigma2: np.ndarray,
) -> RowPosteriorContext:
    sel = state.s == m
    e = eps[sel]
    w = 1.0 / sigma2[n, sel]
    N = eps.shape[1]
    omega_inv = np.eye(N) / state.gamma_B[n] + (e * w[:, None]).T @ e
    return RowPosteriorContext(m=m, n=n, T_m=int(sel.sum()), omega_inv=omega_inv, B=state.B[m], gamma=float(state.gamma_B[n]))


def _cofactor_vector(B: np.ndarray, n: int) -> np.ndarray:
    """Vector c with det(B) = B[n] @ c for any choice of row n."""
    others = np.delete(B, n, axis=0)
    _, sv, vt = np.linalg.svd(others)
    if sv.size and sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise SingularRowError(f"rows other than {n} of B are rank deficient")
    w = vt[-1]
    probe = B.copy()
    probe[n] = w
    return w * np.linalg.det(probe)


def _whitened(ctx: RowPosteriorContext, V: np.ndarray):
    S = V @ ctx.omega_inv @ V.T
    try:
        L = linalg.cholesky(S, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"row {ctx.n}, regime {ctx.m}: scale matrix is not positive definite") from None
    c = _cofactor_vector(ctx.B, ctx.n)
    v = linalg.solve_triangular(L, V @ c, lower=True)
    return L, v


def row_log_kernel(b: np.ndarray, ctx: RowPosteriorContext, V: np.ndarray) -> float:
    """Unnormalised log full conditional: T_m log|det B| - b V Omega^{-1} V' b' / 2."""
    b = np.asarray(b, dtype=float)
    Bk = ctx.B.copy()
    Bk[ctx.n] = b @ V
    _, logdet = np.linalg.slogdet(Bk)
    quad = b @ (V @ ctx.omega_inv @ V.T) @ b
    return ctx.T_m * logdet - 0.5 * quad


def row_log_marginal(ctx: RowPosteriorContext, V: np.ndarray) -> float:
    """log of the integral over b of  N(b; 0, gamma I_r) |det B|^{T_m} exp(-0.5 sum_t u_{n,t}^2 / sigma2_{n,t}).

    Equivalently the log normalising constant of the row's full conditional
    kernel times the prior normaliser; differences across patterns give the
    conditional Bayes factors used by the indicator step.
    """
    L, v = _whitened(ctx, V)
    r = V.shape[0]
    norm_v = float(np.linalg.norm(v))
    T_m = ctx.T_m
    log_norm_v = math.log(norm_v) if norm_v > 0 else -math.inf
    return (
        -0.5 * r * (LOG_2PI + math.log(ctx.gamma))
        - float(np.sum(np.log(np.diag(L))))
        + (T_m * log_norm_v if T_m else 0.0)
        + 0.5 * (r - 1) * LOG_2PI
        + 0.5 * (T_m + 1) * math.log(2.0)
        + float(gammaln(0.5 * (T_m + 1)))
    )


def sample_structural_row(ctx: RowPosteriorContext, V: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact draw of the free coefficients of row ``ctx.n`` (Waggoner-Zha)."""
    L, v = _whitened(ctx, V)
    r = V.shape[0]
    norm_v = np.linalg.norm(v)
    if not norm_v > 0:
        raise SingularRowError(f"row {ctx.n}, regime {ctx.m}: no free direction affects det(B)")
    beta = np.empty(r)
    beta[0] = math.sqrt(rng.gamma(0.5 * (ctx.T_m + 1), 2.0)) * (1.0 if rng.uniform() < 0.5 else -1.0)
    beta[1:] = rng.standard_normal(r - 1)
    # Householder reflection taking e_1 to v / |v|
    direction = v / norm_v
    u = -direction
    u[0] += 1.0
    uu = u @ u
    if uu > 1e-30:
        beta = beta - u * (2.0 * (u @ beta) / uu)
    return linalg.solve_triangular(L.T, beta, lower=False)


def sample_tvi_indicator(
    n: int,
    m: int,
    state: ParameterState,
    patterns: RestrictionPatternSet,
    data: Dataset | None,
    rng: np.random.Generator,
    *,
    eps: np.ndarray | None = None,
    sigma2: np.ndarray | None = None,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Joint draw of the pattern indicator and the row's free coefficients.

    Candidates ``b_k`` are drawn from each pattern's full conditional; the
    indicator weights are the conditional marginal likelihoods (likelihood x
    prior at ``b_k`` divided by the candidate's full-conditional density,
    which does not depend on ``b_k``) times the flat 1/K prior. Returns
    ``(k, b_k, probabilities)``.
    """
    if eps is None:
        eps = state.residuals(data)
    if sigma2 is None:
        sigma2 = state.sigma2()
    ctx = row_context(n, m, state, eps, sigma2)
    K = patterns.n_patterns(n)
    candidates = []
    logw = np.empty(K)
    for k in range(K):
        V = patterns.V(n, m, k)
        candidates.append(sample_structural_row(ctx, V, rng))
        logw[k] = row_log_marginal(ctx, V) - math.log(K)
    if not np.any(np.isfinite(logw)):
        raise FloatingPointError(f"equation {n}, regime {m}: all pattern weights are -inf")
    w = np.exp(logw - logw.max())
    prob = w / w.sum()
    k = int(rng.choice(K, p=prob)) if K > 1 else 0
    return k, candidates[k], prob


def sample_structural_block(
    state: ParameterState,
    patterns: RestrictionPatternSet,
    config: ModelConfig,
    data: Dataset,
    rng: np.random.Generator,
) -> None:
    """Rows of every B_m (with indicator steps) followed by the hyperparameters; updates in place."""
    eps = state.residuals(data)
    sigma2 = state.sigma2()
    N = patterns.n_vars
    for m in range(state.n_regimes):
        for n in range(N):
            if patterns.n_patterns(n) > 1:
                k, b, _ = sample_tvi_indicator(n, m, state, patterns, data, rng, eps=eps, sigma2=sigma2)
                state.kappa[m, n] = k
            else:
                ctx = row_context(n, m, state, eps, sigma2)
                b = sample_structural_row(ctx, patterns.V(n, m, 0), rng)
            row = np.zeros(N)
            row[patterns.free[n][state.kappa[m, n]]] = b
            state.B[m, n] = row
    sample_b_hyperparams(state, patterns, config, rng)


def sample_b_hyperparams(
    state: ParameterState,
    patterns: RestrictionPatternSet,
    config: ModelConfig,
    rng: np.random.Generator,
) -> None:
    pr = config.priors
    N = patterns.n_vars
    for n in range(N):
        bb = float(np.sum(state.B[:, n, :] ** 2))
        r = sum(patterns.r(n, int(state.kappa[m, n])) for m in range(state.n_regimes))
        state.gamma_B[n] = sample_ig2(state.s_B[n] + bb, pr.nu_B + r, rng)
        scale = 1.0 / (1.0 / state.s_gamma_B + 1.0 / (2.0 * state.gamma_B[n]))
        state.s_B[n] = sample_gamma(scale, pr.nu_gamma_B + 0.5 * pr.nu_B, rng)
    state.s_gamma_B = float(sample_ig2(pr.s_s_B + 2.0 * state.s_B.sum(), pr.nu_s_B + 2 * N * pr.nu_gamma_B, rng))


def normalize_signs(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip rows so each diagonal element is positive.

    Works on any stack ``(..., N, N)``. A zero diagonal element falls back to
    the sign of the row's first nonzero entry; such rows are flagged in the
    returned boolean array of shape ``(..., N)``.
    """
    B = np.asarray(B, dtype=float)
    diag = np.diagonal(B, axis1=-2, axis2=-1)
    sign = np.sign(diag)
    flagged = sign == 0
    if np.any(flagged):
        nz = B != 0
        first = np.argmax(nz, axis=-1)
        first_val = np.take_along_axis(B, first[..., None], axis=-1)[..., 0]
        sign = np.where(flagged, np.sign(first_val), sign)
        sign = np.where(sign == 0, 1.0, sign)
    return B * sign[..., None], flagged

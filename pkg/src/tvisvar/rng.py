"""Seeded random-variate kernels used by the Gibbs blocks.

All kernels take an explicit ``numpy.random.Generator``; nothing here touches
global random state.

Parameterisations
-----------------
``IG2(s, nu)``
    density proportional to ``x**(-(nu + 2) / 2) * exp(-s / (2 x))``, i.e.
    ``1 / x ~ Gamma(shape=nu / 2, scale=2 / s)``. Mean ``s / (nu - 2)``.
``G(scale, shape)``
    density proportional to ``x**(shape - 1) * exp(-x / scale)``.
``GIG(lam, chi, psi)``
    density proportional to ``x**(lam - 1) * exp(-(chi / x + psi * x) / 2)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg, stats

__all__ = [
    "make_rng",
    "spawn_rngs",
    "chain_seeds",
    "sample_gig",
    "sample_truncated_normal",
    "sample_dirichlet",
    "sample_ig2",
    "sample_gamma",
    "sample_mvn_precision",
    "precision_mean",
    "NotPositiveDefiniteError",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a precision matrix fails its Cholesky factorisation."""


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for ``n`` parallel chains sharing one master seed."""
    return [make_rng(child) for child in np.random.SeedSequence(seed).spawn(n)]


def chain_seeds(seed: int, n: int) -> list[int]:
    """Integer seeds for ``n`` chains derived from one master seed."""
    return [int(c.generate_state(1, np.uint32)[0]) for c in np.random.SeedSequence(seed).spawn(n)]


# ---------------------------------------------------------------------------
# scalar / low-dimensional kernels
# ---------------------------------------------------------------------------


def sample_gamma(scale: float, shape: float, rng: np.random.Generator, size=None):
    if scale <= 0 or shape <= 0:
        raise ValueError(f"gamma requires scale>0 and shape>0, got scale={scale}, shape={shape}")
    return rng.gamma(shape, scale, size=size)


def sample_ig2(s: float, nu: float, rng: np.random.Generator, size=None):
    if s <= 0 or nu <= 0:
        raise ValueError(f"IG2 requires s>0 and nu>0, got s={s}, nu={nu}")
    return 1.0 / rng.gamma(0.5 * nu, 2.0 / s, size=size)


def sample_dirichlet(alpha, rng: np.random.Generator, size=None) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or np.any(~(a > 0)):
        raise ValueError("Dirichlet concentration must be a vector of positive values")
    return rng.dirichlet(a, size=size)


def sample_gig(lam: float, chi: float, psi: float, rng: np.random.Generator, size=None):
    """Draw from GIG(lam, chi, psi).

    The interior case uses scipy's ``geninvgauss`` (Hormann and Leydold's
    ratio-of-uniforms generator) after rescaling; ``chi == 0`` and
    ``psi == 0`` fall back to the gamma and inverse-gamma limits.
    """
    if chi < 0 or psi < 0:
        raise ValueError(f"GIG requires chi>=0 and psi>=0, got chi={chi}, psi={psi}")
    if chi == 0 and psi == 0:
        raise ValueError("GIG with chi=0 and psi=0 is improper")
    if chi == 0:
        if lam <= 0:
            raise ValueError(f"GIG with chi=0 needs lam>0, got {lam}")
        return rng.gamma(lam, 2.0 / psi, size=size)
    if psi == 0:
        if lam >= 0:
            raise ValueError(f"GIG with psi=0 needs lam<0, got {lam}")
        return 1.0 / rng.gamma(-lam, 2.0 / chi, size=size)
    omega = math.sqrt(chi * psi)
    scale = math.sqrt(chi / psi)
    if omega < 1e-12:
        # numerically at the boundary; the limiting law is accurate to O(omega)
        if lam > 0:
            return rng.gamma(lam, 2.0 / psi, size=size)
        if lam < 0:
            return 1.0 / rng.gamma(-lam, 2.0 / chi, size=size)
    draw = stats.geninvgauss.rvs(lam, omega, scale=scale, size=size, random_state=rng)
    return float(draw) if size is None else draw


def _tn_standard(a: float, b: float, rng: np.random.Generator) -> float:
    """One draw of N(0, 1) truncated to (a, b) by Robert's accept-reject scheme."""
    if b < 0:
        return -_tn_standard(-b, -a, rng)
    if a <= 0:
        # interval contains the mode
        if b - a > math.sqrt(2 * math.pi):
            while True:
                z = rng.standard_normal()
                if a < z < b:
                    return z
        while True:
            z = rng.uniform(a, b)
            if rng.uniform() <= math.exp(-0.5 * z * z):
                return z
    # 0 < a < b: right tail
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    uniform_cutoff = (
        2.0 * math.sqrt(math.e) / (a + math.sqrt(a * a + 4.0))
        * math.exp(0.25 * (a * a - a * math.sqrt(a * a + 4.0)))
    )
    if b - a < uniform_cutoff:
        while True:
            z = rng.uniform(a, b)
            if rng.uniform() <= math.exp(0.5 * (a * a - z * z)):
                return z
    while True:
        z = a + rng.exponential(1.0 / alpha)
        if z >= b:
            continue
        if rng.uniform() <= math.exp(-0.5 * (z - alpha) ** 2):
            return z


def sample_truncated_normal(
    mu: float,
    sigma2: float,
    lower: float,
    upper: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """N(mu, sigma2) restricted to (lower, upper); stable far in the tails."""
    if not lower < upper:
        raise ValueError(f"need lower < upper, got ({lower}, {upper})")
    if not sigma2 > 0:
        raise ValueError(f"need sigma2 > 0, got {sigma2}")
    sd = math.sqrt(sigma2)
    a = (lower - mu) / sd
    b = (upper - mu) / sd
    if size is None:
        return mu + sd * _tn_standard(a, b, rng)
    return mu + sd * np.array([_tn_standard(a, b, rng) for _ in range(size)])


# ---------------------------------------------------------------------------
# Gaussian draws in precision form
# ---------------------------------------------------------------------------


def _is_tridiagonal_pair(precision) -> bool:
    return isinstance(precision, tuple) and len(precision) == 2


def _banded_upper(diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
    ab = np.zeros((2, diag.shape[0]))
    ab[0, 1:] = offdiag
    ab[1] = diag
    return ab


def _factor(precision):
    """Upper Cholesky factor U with precision = U'U, dense or banded storage."""
    try:
        if _is_tridiagonal_pair(precision):
            diag, offdiag = (np.asarray(x, dtype=float) for x in precision)
            return linalg.cholesky_banded(_banded_upper(diag, offdiag), lower=False), True
        return linalg.cholesky(np.asarray(precision, dtype=float), lower=False), False
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefiniteError(f"precision matrix is not positive definite: {err}") from None


def precision_mean(loc, precision) -> np.ndarray:
    """Solve ``precision @ mean = loc``.

    ``precision`` is a dense SPD matrix or a ``(diag, offdiag)`` pair for a
    symmetric tridiagonal matrix.
    """
    factor, banded = _factor(precision)
    loc = np.asarray(loc, dtype=float)
    if banded:
        return linalg.cho_solve_banded((factor, False), loc)
    return linalg.cho_solve((factor, False), loc)


def sample_mvn_precision(loc, precision, rng: np.random.Generator | None = None, *, z=None) -> np.ndarray:
    """Draw from N(precision^{-1} loc, precision^{-1}).

    Tridiagonal precisions are given as ``(diag, offdiag)`` and handled in
    O(n) with banded LAPACK routines. ``z`` optionally supplies the
    standard-normal innovations (used to compare the dense and banded paths
    on identical draws).
    """
    factor, banded = _factor(precision)
    loc = np.asarray(loc, dtype=float)
    n = loc.shape[0]
    if z is None:
        z = rng.standard_normal(n)
    if banded:
        mean = linalg.cho_solve_banded((factor, False), loc)
        return mean + linalg.solve_banded((0, 1), factor, z)
    mean = linalg.cho_solve((factor, False), loc)
    return mean + linalg.solve_triangular(factor, z, lower=False)

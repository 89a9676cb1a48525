"""Posterior summaries computed from a stored archive.

All functions are read-only over the archive. Regime-conditional impulse
responses hold the regime fixed along the horizon.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .gibbs import PosteriorArchive
from .simulation import companion_matrix
from .structural import normalize_signs

__all__ = [
    "AnalysisError",
    "EmptySelectionError",
    "hdi",
    "tvi_probabilities",
    "regime_probabilities",
    "HetReport",
    "verify_heteroskedasticity",
    "IrfResult",
    "impulse_responses",
    "impact_response_distribution",
    "standardized_shocks",
    "CumulativeEffects",
    "cumulative_effects",
    "CounterfactualResult",
    "counterfactual",
    "RegimeMoments",
    "regime_moments",
    "write_table",
    "write_json",
]

log = logging.getLogger(__name__)

SINGULAR_COND = 1e12


class AnalysisError(ValueError):
    pass


class EmptySelectionError(AnalysisError):
    """A draw filter selected nothing."""


def hdi(samples: np.ndarray, mass: float = 0.95, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Shortest interval holding ``mass`` of the samples along ``axis``."""
    if not 0 < mass <= 1:
        raise ValueError("mass must be in (0, 1]")
    x = np.sort(np.moveaxis(np.asarray(samples, dtype=float), axis, 0), axis=0)
    n = x.shape[0]
    if n == 0:
        raise EmptySelectionError("no samples")
    w = min(max(int(math.ceil(mass * n)), 1), n)
    widths = x[w - 1 :] - x[: n - w + 1]
    i = np.argmin(widths, axis=0)
    lo = np.take_along_axis(x, i[None], axis=0)[0]
    hi = np.take_along_axis(x, (i + w - 1)[None], axis=0)[0]
    return lo, hi


def _summarize(draws: np.ndarray, mass: float):
    lo, hi = hdi(draws, mass)
    med = np.median(draws, axis=0)
    return med, lo, hi


def _require(archive: PosteriorArchive) -> int:
    D = len(archive)
    if D == 0:
        raise AnalysisError("archive holds no draws")
    return D


# ---------------------------------------------------------------------------
# probabilities
# ---------------------------------------------------------------------------


def tvi_probabilities(archive: PosteriorArchive, equation: int | None = None) -> np.ndarray:
    """M x K table of posterior pattern probabilities for the TVI equation (0-based index)."""
    _require(archive)
    n = archive.tvi_equation if equation is None else equation
    K = len(archive.pattern_names) if archive.pattern_names else int(archive.kappa[:, :, n].max()) + 1
    kappa = archive.kappa[:, :, n]
    M = kappa.shape[1]
    out = np.zeros((M, K))
    for m in range(M):
        out[m] = np.bincount(kappa[:, m], minlength=K)[:K]
    return out / kappa.shape[0]


def regime_probabilities(archive: PosteriorArchive) -> np.ndarray:
    """T x M posterior probabilities Pr[s_t = m | data]."""
    _require(archive)
    s = archive.s
    M = archive.P.shape[1]
    return np.stack([(s == m).mean(axis=0) for m in range(M)], axis=1)


@dataclass
class HetReport:
    regime: int
    fraction_near_zero: float
    hdi_abs: tuple[float, float]
    median_abs: float
    identified: bool
    counts: np.ndarray
    edges: np.ndarray

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "fraction_near_zero": self.fraction_near_zero,
            "hdi_abs": list(self.hdi_abs),
            "median_abs": self.median_abs,
            "identified": self.identified,
            "histogram": {"counts": self.counts.tolist(), "edges": self.edges.tolist()},
        }


def verify_heteroskedasticity(
    archive: PosteriorArchive, n: int, eps: float = 0.05, mass: float = 0.90, bins: int = 40
) -> list[HetReport]:
    """Per-regime evidence that shock ``n`` is heteroskedastic.

    A regime is flagged as identified when the HDI of ``|omega_n(m)|``
    lies entirely above ``eps``.
    """
    _require(archive)
    omega = archive.omega[:, n, :]
    out = []
    for m in range(omega.shape[1]):
        w = omega[:, m]
        a = np.abs(w)
        lo, hi = hdi(a, mass)
        counts, edges = np.histogram(w, bins=bins)
        out.append(
            HetReport(
                regime=m,
                fraction_near_zero=float(np.mean(a < eps)),
                hdi_abs=(float(lo), float(hi)),
                median_abs=float(np.median(a)),
                identified=bool(lo > eps),
                counts=counts,
                edges=edges,
            )
        )
    return out


# ---------------------------------------------------------------------------
# impulse responses
# ---------------------------------------------------------------------------


@dataclass
class IrfResult:
    """Regime-conditional responses to one structural shock.

    ``responses`` has shape (draws, regimes, variables, horizon + 1).
    """

    shock: int
    size: float | None
    instrument: int | None
    mass: float
    responses: np.ndarray
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_skipped: int

    def rows(self, names=None):
        D, M, N, H1 = self.responses.shape
        names = names or [f"y{i + 1}" for i in range(N)]
        for m in range(M):
            for i in range(N):
                for h in range(H1):
                    yield [m + 1, names[i], h, self.median[m, i, h], self.lower[m, i, h], self.upper[m, i, h]]


def _inverse_or_none(B: np.ndarray) -> np.ndarray | None:
    if not np.all(np.isfinite(B)) or np.linalg.cond(B) > SINGULAR_COND:
        return None
    try:
        return np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return None


def _propagate(A: np.ndarray, lags: int, impact: np.ndarray, horizon: int) -> np.ndarray:
    """(N, horizon + 1) responses to an impact vector through the companion form."""
    N = A.shape[0]
    C = companion_matrix(A, lags)
    out = np.empty((N, horizon + 1))
    x = np.zeros(N * lags)
    x[:N] = impact
    out[:, 0] = impact
    for h in range(1, horizon + 1):
        x = C @ x
        out[:, h] = x[:N]
    return out


def _impact(Binv: np.ndarray, shock: int, size: float | None, instrument: int) -> np.ndarray | None:
    col = Binv[:, shock]
    if size is None:
        return col.copy()
    denom = col[instrument]
    if abs(denom) < 1e-300:
        return None
    return col * (size / denom)


def impulse_responses(
    archive: PosteriorArchive,
    shock: int,
    horizon: int,
    size: float | None = 1.0,
    instrument: int | None = None,
    mass: float = 0.95,
) -> IrfResult:
    """Responses of all variables to structural shock ``shock`` (0-based).

    The impact column of ``B_m^{-1}`` is rescaled so that variable
    ``instrument`` (default: the shock's own equation) moves by ``size`` on
    impact. With ``size=None`` the shock has unit standard deviation. Draws
    with a (numerically) singular ``B_m`` are skipped and counted.
    """
    D = _require(archive)
    lags = archive.config.lags
    instrument = shock if instrument is None else instrument
    M, N = archive.B.shape[1], archive.B.shape[2]
    Bn, _ = normalize_signs(archive.B)
    resp = np.full((D, M, N, horizon + 1), np.nan)
    skipped = 0
    for d in range(D):
        for m in range(M):
            Binv = _inverse_or_none(Bn[d, m])
            imp = None if Binv is None else _impact(Binv, shock, size, instrument)
            if imp is None:
                skipped += 1
                continue
            resp[d, m] = _propagate(archive.A[d], lags, imp, horizon)
    if skipped:
        log.warning("impulse responses: skipped %d singular draw/regime cells", skipped)
    keep = ~np.isnan(resp).any(axis=(1, 2, 3))
    if not keep.any():
        raise AnalysisError("every draw had a singular structural matrix")
    kept = resp[keep]
    med, lo, hi = _summarize(kept, mass)
    return IrfResult(shock, size, instrument, mass, kept, med, lo, hi, skipped)


@dataclass
class ImpactDistribution:
    values: np.ndarray
    counts: np.ndarray
    edges: np.ndarray
    n_selected: int
    n_total: int


def impact_response_distribution(
    archive: PosteriorArchive,
    shock: int,
    variable: int,
    regime: int,
    pattern: int | None = None,
    size: float | None = None,
    instrument: int | None = None,
    bins: int = 50,
) -> ImpactDistribution:
    """Impact (h = 0) response of ``variable`` to ``shock`` in ``regime`` across draws.

    With ``pattern`` set, only draws whose TVI indicator in ``regime``
    equals ``pattern`` are used.
    """
    D = _require(archive)
    sel = np.ones(D, dtype=bool)
    if pattern is not None:
        sel = archive.kappa[:, regime, archive.tvi_equation] == pattern
        if not sel.any():
            raise EmptySelectionError(f"no draws with pattern {pattern} in regime {regime + 1}")
    instrument = shock if instrument is None else instrument
    Bn, _ = normalize_signs(archive.B[sel, regime])
    vals = []
    for B in Bn:
        Binv = _inverse_or_none(B)
        imp = None if Binv is None else _impact(Binv, shock, size, instrument)
        if imp is not None:
            vals.append(imp[variable])
    vals = np.asarray(vals)
    if vals.size == 0:
        raise EmptySelectionError("no usable draws after removing singular structural matrices")
    counts, edges = np.histogram(vals, bins=bins)
    return ImpactDistribution(vals, counts, edges, int(sel.sum()), D)


# ---------------------------------------------------------------------------
# shocks, cumulative effects, counterfactuals
# ---------------------------------------------------------------------------


def standardized_shocks(archive: PosteriorArchive, data: Dataset, i: int) -> np.ndarray:
    """(T, N) shocks of draw ``i`` divided by their volatility."""
    st = archive.state(i)
    return st.structural_shocks(data) / np.sqrt(st.sigma2()).T


@dataclass
class CumulativeEffects:
    shock: int
    window: int
    mass: float
    draws: np.ndarray  # (D, T, N)
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    truncated: np.ndarray  # (T,) fewer than ``window`` past shocks available


def cumulative_effects(
    archive: PosteriorArchive, data: Dataset, shock: int, window: int = 12, mass: float = 0.68
) -> CumulativeEffects:
    """Sum over j < window of the horizon-j response to the realised shock at t - j.

    The response to the shock at t - j is computed in the regime prevailing
    at t - j.
    """
    D = _require(archive)
    if window < 1:
        raise ValueError("window must be >= 1")
    T, N, lags = data.T, data.N, data.lags
    out = np.zeros((D, T, N))
    M = archive.B.shape[1]
    for d in range(D):
        st = archive.state(d)
        u = st.structural_shocks(data)[:, shock]
        theta = np.zeros((M, N, window))
        for m in range(M):
            Binv = _inverse_or_none(st.B[m])
            if Binv is None:
                raise AnalysisError(f"draw {d}: structural matrix of regime {m + 1} is singular")
            theta[m] = _propagate(st.A, lags, Binv[:, shock], window - 1)
        # per-shock contribution paths then windowed sum
        for j in range(window):
            contrib = theta[st.s[: T - j], :, j] * u[: T - j, None]
            out[d, j:] += contrib
    med, lo, hi = _summarize(out, mass)
    truncated = np.arange(T) < window - 1
    return CumulativeEffects(shock, window, mass, out, med, lo, hi, truncated)


@dataclass
class CounterfactualResult:
    policy_equation: int
    donor_regime: int
    mass: float
    actual: np.ndarray  # (D, T, N) model-implied path
    counterfactual: np.ndarray  # (D, T, N)
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _iterate_var(A: np.ndarray, eps: np.ndarray, init_lags: np.ndarray, n_det: int) -> np.ndarray:
    T, N = eps.shape
    p = init_lags.shape[0]
    hist = [row.copy() for row in init_lags[::-1]]  # oldest first
    det = np.ones(n_det)
    Y = np.empty((T, N))
    for t in range(T):
        x = np.concatenate([hist[-l] for l in range(1, p + 1)] + [det])
        Y[t] = A @ x + eps[t]
        hist.append(Y[t])
    return Y


def _path(st, B: np.ndarray, omega: np.ndarray, z: np.ndarray, data: Dataset) -> np.ndarray:
    sigma = np.exp(0.5 * omega[:, st.s] * st.h).T  # (T, N)
    e = sigma * z
    eps = np.empty_like(e)
    for m in range(B.shape[0]):
        sel = st.s == m
        if sel.any():
            eps[sel] = np.linalg.solve(B[m], e[sel].T).T
    return _iterate_var(st.A, eps, data.initial_lags(), data.n_det)


def counterfactual(
    archive: PosteriorArchive, data: Dataset, policy_equation: int, donor_regime: int, mass: float = 0.68
) -> CounterfactualResult:
    """Re-run the economy with the policy row of B and its omega taken from ``donor_regime``.

    Standardised shocks, the regime path and the log-volatilities are held at
    their draws. ``actual`` runs the identical recursion with the original
    parameters, so a donor equal to the realised regime reproduces it exactly.
    """
    D = _require(archive)
    M, N = archive.B.shape[1], archive.B.shape[2]
    if not 0 <= donor_regime < M:
        raise AnalysisError(f"donor regime {donor_regime} out of range for {M} regimes")
    if not 0 <= policy_equation < N:
        raise AnalysisError(f"policy equation {policy_equation} out of range for {N} variables")
    T = data.T
    actual = np.empty((D, T, N))
    cf = np.empty((D, T, N))
    for d in range(D):
        st = archive.state(d)
        z = st.structural_shocks(data) / np.sqrt(st.sigma2()).T
        B_cf = st.B.copy()
        B_cf[:, policy_equation] = st.B[donor_regime, policy_equation]
        om_cf = st.omega.copy()
        om_cf[policy_equation] = st.omega[policy_equation, donor_regime]
        actual[d] = _path(st, st.B, st.omega, z, data)
        cf[d] = _path(st, B_cf, om_cf, z, data)
    med, lo, hi = _summarize(cf, mass)
    return CounterfactualResult(policy_equation, donor_regime, mass, actual, cf, med, lo, hi)


# ---------------------------------------------------------------------------
# regime-specific moments
# ---------------------------------------------------------------------------


@dataclass
class RegimeMoments:
    regime_path: np.ndarray  # posterior-mode regime per t
    counts: np.ndarray
    data_mean: np.ndarray  # (M, N)
    data_sd: np.ndarray
    shock_mean: np.ndarray
    shock_sd: np.ndarray
    differenced: np.ndarray  # (N,) bool

    def to_dict(self, names=None) -> dict:
        return {
            "names": list(names) if names is not None else None,
            "counts": self.counts.tolist(),
            "differenced": self.differenced.tolist(),
            "data_mean": self.data_mean.tolist(),
            "data_sd": self.data_sd.tolist(),
            "shock_mean": self.shock_mean.tolist(),
            "shock_sd": self.shock_sd.tolist(),
        }


def _group_moments(x: np.ndarray, path: np.ndarray, M: int):
    mean = np.full((M, x.shape[1]), np.nan)
    sd = np.full((M, x.shape[1]), np.nan)
    for m in range(M):
        v = x[path == m]
        if v.shape[0]:
            mean[m] = v.mean(axis=0)
        if v.shape[0] > 1:
            sd[m] = v.std(axis=0, ddof=1)
    return mean, sd


def regime_moments(archive: PosteriorArchive, data: Dataset, difference=None) -> RegimeMoments:
    """Means and standard deviations of data and posterior-mean shocks by modal regime.

    ``difference`` flags variables to first-difference (the presample value
    supplies y_{t-1} at t = 1). Sample standard deviations use ddof = 1.
    """
    D = _require(archive)
    N = data.N
    probs = regime_probabilities(archive)
    M = probs.shape[1]
    path = np.argmax(probs, axis=1)
    diff = np.zeros(N, dtype=bool)
    if difference is not None:
        diff[np.asarray(difference)] = True
    y = data.Y.copy()
    prev = data.X[:, :N]
    y[:, diff] = data.Y[:, diff] - prev[:, diff]
    u = np.zeros((data.T, N))
    for d in range(D):
        u += archive.state(d).structural_shocks(data)
    u /= D
    dm, ds = _group_moments(y, path, M)
    um, us = _group_moments(u, path, M)
    return RegimeMoments(path, np.bincount(path, minlength=M), dm, ds, um, us, diff)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def write_table(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path: str | Path, obj) -> None:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.bool_,)):
            return bool(o)
        raise TypeError(type(o))

    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")

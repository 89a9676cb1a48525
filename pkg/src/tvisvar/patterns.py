"""Exclusion-restriction patterns for the rows of the structural matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ModelConfig

__all__ = ["RestrictionPatternSet", "build_patterns", "selection_matrix"]


def selection_matrix(free_columns: np.ndarray, n_vars: int) -> np.ndarray:
    """r x N matrix V with ``[B]_n = b @ V`` placing b at ``free_columns``."""
    V = np.zeros((len(free_columns), n_vars))
    V[np.arange(len(free_columns)), free_columns] = 1.0
    return V


@dataclass(frozen=True)
class RestrictionPatternSet:
    """Free columns per equation and pattern.

    ``free[n][k]`` holds the sorted column indices left unrestricted in
    equation ``n`` under pattern ``k``. Patterns are shared by all regimes;
    a regime selects one of them through its indicator.
    """

    n_vars: int
    n_regimes: int
    free: tuple[tuple[np.ndarray, ...], ...]
    names: tuple[str, ...] = ()

    def n_patterns(self, n: int) -> int:
        return len(self.free[n])

    def r(self, n: int, k: int) -> int:
        return len(self.free[n][k])

    def V(self, n: int, m: int, k: int) -> np.ndarray:
        # regime-agnostic; m kept so callers read like the model notation
        return selection_matrix(self.free[n][k], self.n_vars)

    def mask(self, n: int, k: int) -> np.ndarray:
        out = np.zeros(self.n_vars, dtype=bool)
        out[self.free[n][k]] = True
        return out

    @property
    def tvi_equations(self) -> list[int]:
        return [n for n in range(self.n_vars) if len(self.free[n]) > 1]

    def conforms(self, B: np.ndarray, kappa_m: np.ndarray) -> bool:
        """True when every row of ``B`` is zero outside its pattern's free columns."""
        for n in range(self.n_vars):
            if np.any(B[n, ~self.mask(n, int(kappa_m[n]))] != 0.0):
                return False
        return True


def build_patterns(config: ModelConfig, pattern_specs=None) -> RestrictionPatternSet:
    """Assemble the pattern set.

    ``pattern_specs`` is a sequence of 0/1 masks (length N) for the TVI
    equation; by default the config's named patterns are used. All other
    equations are lower triangular (columns ``1..n`` free).
    """
    N = config.n_vars
    if pattern_specs is None:
        pattern_specs = list(config.patterns.values())
        names = tuple(config.patterns)
    else:
        pattern_specs = list(pattern_specs)
        names = tuple(f"pattern {k + 1}" for k in range(len(pattern_specs)))
    tvi = config.tvi_equation - 1

    free: list[tuple[np.ndarray, ...]] = []
    for n in range(N):
        if n == tvi and pattern_specs:
            cols = []
            for k, spec in enumerate(pattern_specs):
                mask = np.asarray(spec, dtype=int)
                if mask.shape != (N,):
                    raise ConfigError(f"pattern {k + 1} must have length {N}")
                if not np.all((mask == 0) | (mask == 1)):
                    raise ConfigError(f"pattern {k + 1} must contain only 0/1 entries")
                idx = np.flatnonzero(mask)
                if idx.size == 0:
                    raise ConfigError(f"pattern {k + 1} leaves no free coefficient")
                cols.append(idx)
            free.append(tuple(cols))
        else:
            free.append((np.arange(n + 1),))
    if not names:
        names = ("lower-triangular",)
    return RestrictionPatternSet(n_vars=N, n_regimes=config.n_regimes, free=tuple(free), names=names)

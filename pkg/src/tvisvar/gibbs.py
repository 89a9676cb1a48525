"""Top-level Gibbs driver and the in-memory posterior archive."""

from __future__ import annotations

import datetime as _dt
import logging
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .autoregressive import MinnesotaPrior, sample_a_block
from .config import ModelConfig
from .data import Dataset
from .markov import sample_markov_block
from .patterns import RestrictionPatternSet
from .rng import make_rng
from .state import ParameterState, check_invariants, init_state
from .structural import sample_structural_block
from .sv import sample_sv_block

__all__ = ["SamplerError", "PosteriorArchive", "run_gibbs", "ARCHIVE_FORMAT_VERSION", "BLOCK_NAMES"]

log = logging.getLogger(__name__)

ARCHIVE_FORMAT_VERSION = 1
BLOCK_NAMES = tuple(f.name for f in fields(ParameterState))
SCALAR_BLOCKS = ("s_gamma_A", "s_gamma_B")


class SamplerError(RuntimeError):
    def __init__(self, iteration: int, block: str, cause: Exception):
        super().__init__(f"iteration {iteration}, {block} block: {cause}")
        self.iteration = iteration
        self.block = block


@dataclass
class PosteriorArchive:
    """Thinned post-burn-in draws, one stacked array per state component."""

    draws: dict[str, np.ndarray]
    manifest: dict
    config: ModelConfig
    pattern_names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.draws["A"].shape[0])

    def __getattr__(self, name):
        draws = self.__dict__.get("draws")
        if draws is not None and name in draws:
            return draws[name]
        raise AttributeError(name)

    def state(self, i: int) -> ParameterState:
        kw = {}
        for name in BLOCK_NAMES:
            v = self.draws[name][i]
            kw[name] = float(v) if name in SCALAR_BLOCKS else np.array(v)
        return ParameterState(**kw)

    def subset(self, index) -> "PosteriorArchive":
        return PosteriorArchive(
            draws={k: v[index] for k, v in self.draws.items()},
            manifest=dict(self.manifest),
            config=self.config,
            pattern_names=list(self.pattern_names),
        )

    @property
    def tvi_equation(self) -> int:
        return self.config.tvi_equation - 1


def _allocate(state: ParameterState, n: int) -> dict[str, np.ndarray]:
    out = {}
    for name in BLOCK_NAMES:
        v = getattr(state, name)
        arr = np.asarray(v)
        out[name] = np.empty((n,) + arr.shape, dtype=arr.dtype)
    return out


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp so repeated runs give byte-identical manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    return now.isoformat(timespec="seconds")


def run_gibbs(
    config: ModelConfig,
    patterns: RestrictionPatternSet,
    data: Dataset,
    seed: int | None = None,
    *,
    initial: ParameterState | None = None,
    progress=None,
) -> PosteriorArchive:
    """Run one chain.

    Each iteration updates, in order, the structural rows with pattern
    indicators and their hyperparameters, the autoregressive rows and their
    hyperparameters, the regime path with P and pi0, and the volatility block.
    Every ``thin``-th post-burn-in state is stored.
    """
    seed = config.mcmc.seed if seed is None else seed
    data.require_estimable()
    rng = make_rng(seed)
    state = init_state(config, patterns, data, rng) if initial is None else initial.copy()
    prior = MinnesotaPrior(config)
    mc = config.mcmc
    n_keep = mc.n_stored
    draws = _allocate(state, n_keep)
    if not config.heteroskedastic:
        state.omega[:] = 0.0

    stored = 0
    for it in range(mc.iterations):
        block = "structural"
        try:
            sample_structural_block(state, patterns, config, data, rng)
            block = "autoregressive"
            sample_a_block(state, config, data, prior, rng)
            block = "markov"
            sample_markov_block(state, config, data, rng)
            if config.heteroskedastic:
                block = "volatility"
                sample_sv_block(state, config, state.structural_shocks(data), rng)
                if not np.all(np.isfinite(state.h)):
                    raise FloatingPointError("non-finite log-volatilities")
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as err:
            raise SamplerError(it, block, err) from err

        if it >= mc.burnin and (it - mc.burnin + 1) % mc.thin == 0 and stored < n_keep:
            check_invariants(state, patterns)
            for name in BLOCK_NAMES:
                draws[name][stored] = getattr(state, name)
            stored += 1
        if progress is not None:
            progress(it)

    manifest = {
        "format_version": ARCHIVE_FORMAT_VERSION,
        "seed": int(seed),
        "config_hash": config.digest(),
        "iterations": mc.iterations,
        "burnin": mc.burnin,
        "thin": mc.thin,
        "n_draws": stored,
        "created": _timestamp(),
    }
    log.info("chain finished: %d draws stored", stored)
    return PosteriorArchive(draws=draws, manifest=manifest, config=config, pattern_names=list(patterns.names))

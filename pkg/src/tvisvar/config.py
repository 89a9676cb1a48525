"""Model configuration and its on-disk (YAML) representation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

__all__ = ["Priors", "McmcControls", "ModelConfig", "ConfigError", "load_config", "dump_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


# Contemporaneous-coefficient patterns for the policy equation, columns ordered
# (y, pi, R, TS, m, sp).
MONETARY_POLICY_PATTERNS: dict[str, list[int]] = {
    "TR": [1, 1, 1, 0, 0, 0],
    "TR with TS": [1, 1, 1, 1, 0, 0],
    "TR with m": [1, 1, 1, 0, 1, 0],
    "MIR": [0, 0, 1, 0, 1, 0],
}


@dataclass
class Priors:
    # structural rows: b | gamma_B ~ N(0, gamma_B I); gamma_B ~ IG2(s_B, nu_B);
    # s_B ~ G(s_gamma_B, nu_gamma_B); s_gamma_B ~ IG2(s_s_B, nu_s_B)
    nu_B: float = 10.0
    nu_gamma_B: float = 10.0
    s_s_B: float = 100.0
    nu_s_B: float = 1.0
    # autoregressive rows, same three-level structure
    nu_A: float = 10.0
    nu_gamma_A: float = 10.0
    s_s_A: float = 10.0
    nu_s_A: float = 10.0
    # Markov chain: row m of P ~ Dirichlet(1 + d_m e_m)
    d_m: float | list[float] = 11.0
    # sigma^2_omega ~ G(scale, shape)
    omega_shape: float = 0.5
    omega_scale: float = 1.0
    # prior variance multiplier on deterministic terms in the Minnesota scale
    deterministic_scale: float = 100.0

    def persistence(self, n_regimes: int) -> list[float]:
        if isinstance(self.d_m, (int, float)):
            return [float(self.d_m)] * n_regimes
        if len(self.d_m) != n_regimes:
            raise ConfigError(f"d_m has {len(self.d_m)} entries, expected {n_regimes}")
        return [float(v) for v in self.d_m]


@dataclass
class McmcControls:
    iterations: int = 20_000
    burnin: int = 10_000
    thin: int = 1
    seed: int = 0

    @property
    def n_stored(self) -> int:
        return (self.iterations - self.burnin) // self.thin


@dataclass
class ModelConfig:
    n_vars: int
    lags: int
    n_regimes: int = 2
    n_det: int = 1
    tvi_equation: int = 1  # 1-based
    patterns: dict[str, list[int]] = field(default_factory=dict)
    priors: Priors = field(default_factory=Priors)
    mcmc: McmcControls = field(default_factory=McmcControls)
    heteroskedastic: bool = True
    asis: bool = True
    var_names: list[str] | None = None

    def __post_init__(self):
        if isinstance(self.priors, Mapping):
            self.priors = Priors(**self.priors)
        if isinstance(self.mcmc, Mapping):
            self.mcmc = McmcControls(**self.mcmc)
        self.patterns = {str(k): [int(x) for x in v] for k, v in dict(self.patterns).items()}
        self.validate()

    @property
    def n_patterns(self) -> int:
        return max(1, len(self.patterns))

    @property
    def n_regressors(self) -> int:
        return self.n_vars * self.lags + self.n_det

    @property
    def pattern_names(self) -> list[str]:
        return list(self.patterns) if self.patterns else ["lower-triangular"]

    def validate(self) -> None:
        if self.n_vars < 2:
            raise ConfigError(f"n_vars must be >= 2, got {self.n_vars}")
        if self.lags < 1:
            raise ConfigError(f"lags must be >= 1, got {self.lags}")
        if self.n_regimes < 1:
            raise ConfigError(f"n_regimes must be >= 1, got {self.n_regimes}")
        if self.n_det < 0:
            raise ConfigError(f"n_det must be >= 0, got {self.n_det}")
        if not 1 <= self.tvi_equation <= self.n_vars:
            raise ConfigError(f"tvi_equation must lie in 1..{self.n_vars}, got {self.tvi_equation}")
        for name, mask in self.patterns.items():
            if len(mask) != self.n_vars:
                raise ConfigError(f"pattern {name!r} has length {len(mask)}, expected {self.n_vars}")
        for f in dataclasses.fields(self.priors):
            value = getattr(self.priors, f.name)
            values = value if isinstance(value, list) else [value]
            if any(not v > 0 for v in values):
                raise ConfigError(f"prior hyperparameter {f.name} must be > 0, got {value}")
        self.priors.persistence(self.n_regimes)
        m = self.mcmc
        if not m.iterations > m.burnin >= 0:
            raise ConfigError(f"need iterations > burnin >= 0, got {m.iterations}, {m.burnin}")
        if m.thin < 1:
            raise ConfigError(f"thin must be >= 1, got {m.thin}")
        if self.var_names is not None and len(self.var_names) != self.n_vars:
            raise ConfigError("var_names length does not match n_vars")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """sha256 of the canonical JSON encoding; stored in archive manifests."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as err:
            raise ConfigError(str(err)) from None


def load_config(path: str | Path) -> tuple[ModelConfig, dict[str, Any]]:
    """Read a YAML config file.

    Returns the model configuration and the remaining top-level entries
    (``data``, ``output``), which are run settings rather than model settings.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with path.open() as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    run_keys = {"data", "output"}
    run = {k: raw.pop(k) for k in list(raw) if k in run_keys}
    if "model" in raw:  # allow a nested layout too
        nested = raw.pop("model")
        raw = {**nested, **raw}
    return ModelConfig.from_dict(raw), run


def dump_config(config: ModelConfig, path: str | Path, **run: Any) -> None:
    payload = {**run, **config.to_dict()}
    with Path(path).open("w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=False)

"""Bayesian Markov-switching SVAR with stochastic volatility and time-varying identification."""

from .analysis import (
    counterfactual,
    cumulative_effects,
    hdi,
    impact_response_distribution,
    impulse_responses,
    regime_moments,
    regime_probabilities,
    tvi_probabilities,
    verify_heteroskedasticity,
)
from .archive import read_archive, write_archive
from .config import McmcControls, ModelConfig, Priors, load_config
from .data import Dataset, load_csv, prepare_dataset
from .gibbs import PosteriorArchive, run_gibbs
from .patterns import RestrictionPatternSet, build_patterns
from .simulation import DgpSpec, simulate
from .state import ParameterState, log_likelihood

__version__ = "0.1.0"

"""Mixed-frequency Bayesian VAR with steady-state priors and common stochastic volatility."""

from .aggregation import AggregationScheme, aggregate_path, build_observation_operator, triangular_weights
from .errors import ConfigurationError, DataError, NumericalError
from .evaluation import EvalReport, dm_test, harvey_factor, lpds, recursive_evaluate, relative_rmse, rmse
from .forecast import PredictiveDraws, simulate_path, simulate_predictive, summarize
from .gibbs import ChainResult, ChainState, SamplerConfig, run_chain
from .models import ModelSpec, PriorSettings, benchmark_models, fit_forecast, mixed_models
from .priors import CSVPrior, MinnesotaSpec, PriorSpec, SteadyStatePrior, build_prior, validate
from .simulate import DGPConfig, default_dgp, simulate_dgp
from .ssm import CompactStateSpace, mean_adjust, reattach_mean, simulation_smoother
from .stats import rng_stream
from .tsdata import MixedPanel, PublicationPattern, Series, assemble_panel, to_quarterly, truncate_to_vintage

__version__ = "0.1.0"

__all__ = [
    "AggregationScheme",
    "CSVPrior",
    "ChainResult",
    "ChainState",
    "CompactStateSpace",
    "ConfigurationError",
    "DGPConfig",
    "DataError",
    "EvalReport",
    "MinnesotaSpec",
    "MixedPanel",
    "ModelSpec",
    "NumericalError",
    "PredictiveDraws",
    "PriorSettings",
    "PriorSpec",
    "PublicationPattern",
    "SamplerConfig",
    "Series",
    "SteadyStatePrior",
    "aggregate_path",
    "assemble_panel",
    "benchmark_models",
    "build_observation_operator",
    "build_prior",
    "default_dgp",
    "dm_test",
    "fit_forecast",
    "harvey_factor",
    "lpds",
    "mean_adjust",
    "mixed_models",
    "reattach_mean",
    "recursive_evaluate",
    "relative_rmse",
    "rmse",
    "rng_stream",
    "run_chain",
    "simulate_dgp",
    "simulate_path",
    "simulate_predictive",
    "simulation_smoother",
    "summarize",
    "to_quarterly",
    "triangular_weights",
    "truncate_to_vintage",
    "validate",
]

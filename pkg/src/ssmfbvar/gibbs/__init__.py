"""Gibbs sampler for the mixed-frequency steady-state BVAR."""

from .chain import ChainResult, initial_state, run_chain
from .config import SamplerConfig
from .niw import NIWPosterior, niw_posterior, regression_data, step_pi_sigma
from .output import load_draws, write_draws
from .state import ChainState
from .steady import (
    adapt_mh_scale,
    build_U,
    lambda_psi_conditional,
    mh_log_ratio,
    omega_gig_parameters,
    psi_posterior,
    step_ng_hierarchy,
    step_psi,
)
from .volatility import MIX_MEAN, MIX_PROB, MIX_VAR, log_chi2_pdf, mixture_pdf, step_volatility

__all__ = [
    "ChainResult",
    "ChainState",
    "MIX_MEAN",
    "MIX_PROB",
    "MIX_VAR",
    "NIWPosterior",
    "SamplerConfig",
    "adapt_mh_scale",
    "build_U",
    "initial_state",
    "lambda_psi_conditional",
    "load_draws",
    "log_chi2_pdf",
    "mh_log_ratio",
    "mixture_pdf",
    "omega_gig_parameters",
    "niw_posterior",
    "psi_posterior",
    "regression_data",
    "run_chain",
    "step_ng_hierarchy",
    "step_pi_sigma",
    "step_psi",
    "step_volatility",
    "write_draws",
]

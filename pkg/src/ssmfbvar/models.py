"""Model configurations (mixed-frequency variants and single-frequency benchmarks)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DataError
from .forecast import PredictiveDraws, simulate_predictive
from .gibbs.chain import ChainResult, run_chain
from .gibbs.config import SamplerConfig
from .priors import CSVPrior, PriorSpec, build_prior
from .stats import rng_stream
from .tsdata import MixedPanel, to_quarterly

FREQUENCIES = ("mixed", "monthly", "quarterly")


@dataclass(frozen=True)
class ModelSpec:
    """One row of the model list.

    ``frequency="monthly"`` estimates on the monthly variables only, cut to the
    balanced sample; ``"quarterly"`` pre-aggregates every variable to quarters.
    Both run on the same sampler with no quarterly latents.
    """

    name: str
    steady_state: str | None = "fixed"
    csv: bool = False
    frequency: str = "mixed"
    p: int = 12

    def __post_init__(self) -> None:
        if self.frequency not in FREQUENCIES:
            raise ConfigurationError(f"unknown model frequency {self.frequency!r}")
        if self.steady_state not in (None, "fixed", "normal_gamma"):
            raise ConfigurationError(f"unknown steady-state prior {self.steady_state!r}")


def mixed_models(p: int = 12) -> tuple[ModelSpec, ...]:
    return (
        ModelSpec("Minn-IW", None, False, p=p),
        ModelSpec("SS-IW", "fixed", False, p=p),
        ModelSpec("SSNG-IW", "normal_gamma", False, p=p),
        ModelSpec("Minn-CSV", None, True, p=p),
        ModelSpec("SS-CSV", "fixed", True, p=p),
        ModelSpec("SSNG-CSV", "normal_gamma", True, p=p),
    )


def benchmark_models(p_monthly: int = 12, p_quarterly: int = 4) -> tuple[ModelSpec, ModelSpec]:
    """Steady-state prior, constant volatility, single-frequency data."""
    return (
        ModelSpec("Benchmark-M", "fixed", False, "monthly", p_monthly),
        ModelSpec("Benchmark-Q", "fixed", False, "quarterly", p_quarterly),
    )


@dataclass(frozen=True)
class PriorSettings:
    """Prior inputs keyed by series id; ``s`` (Minnesota scales) defaults to AR(4) residual SDs."""

    mu_psi: Mapping[str, float]
    sd_psi: Mapping[str, float] = field(default_factory=dict)
    lambda1: float = 0.2
    lambda2: float = 1.0
    c0: float = 0.01
    c1: float = 0.01
    csv_prior: CSVPrior = field(default_factory=CSVPrior)

    def for_ids(self, ids) -> tuple[list[float], list[float] | None]:
        try:
            mu = [float(self.mu_psi[i]) for i in ids]
        except KeyError as exc:
            raise ConfigurationError(f"no steady-state prior mean for {exc.args[0]}") from None
        sd = [float(self.sd_psi[i]) for i in ids] if all(i in self.sd_psi for i in ids) else None
        return mu, sd


def balanced_block(panel: MixedPanel) -> MixedPanel:
    """Rows from the first to the last fully observed row; interior gaps are an error."""
    full = panel.obs_monthly.all(axis=1)
    if not full.any():
        raise DataError("no fully observed row for the single-frequency model")
    lo, hi = int(np.argmax(full)), int(len(full) - np.argmax(full[::-1]))
    if not full[lo:hi].all():
        raise DataError("single-frequency data has interior gaps")
    return MixedPanel(panel.dates[lo:hi], panel.monthly_ids, (), panel.y_monthly[lo:hi], panel.obs_monthly[lo:hi],
                      np.zeros((hi - lo, 0)), np.zeros((hi - lo, 0), dtype=bool), panel.freq)


def estimation_panel(spec: ModelSpec, panel: MixedPanel) -> MixedPanel:
    if spec.frequency == "mixed":
        return panel
    if spec.frequency == "monthly":
        if not panel.n_m:
            raise DataError("the monthly benchmark needs monthly variables")
        return balanced_block(panel.select(quarterly=[]))
    return balanced_block(to_quarterly(panel))


def spec_prior(spec: ModelSpec, panel: MixedPanel, settings: PriorSettings) -> PriorSpec:
    mu, sd = settings.for_ids(panel.ids)
    return build_prior(panel, spec.p, ss=spec.steady_state, csv=spec.csv, mu_psi=mu, sd_psi=sd,
                       lambda1=settings.lambda1, lambda2=settings.lambda2, c0=settings.c0, c1=settings.c1,
                       csv_prior=settings.csv_prior)


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    chain: ChainResult
    predictive: PredictiveDraws


def fit_forecast(
    spec: ModelSpec,
    panel: MixedPanel,
    settings: PriorSettings,
    sampler: SamplerConfig,
    H: int,
) -> FitResult:
    """Estimate ``spec`` on ``panel`` and simulate forecasts reaching month ``panel.last_date + H``.

    Single-frequency models start from their own (earlier) origin and get
    enough extra steps to cover the same target dates.
    """
    est = estimation_panel(spec, panel)
    prior = spec_prior(spec, est, settings)
    chain = run_chain(est, prior, sampler)
    step = 3 if est.freq == "Q" else 1
    steps = max(1, math.ceil((panel.last_date + H - est.last_date) / step))
    rng = rng_stream(sampler.seed, sampler.stream + 1_000_000)
    pred = simulate_predictive(chain, steps, rng, step=step)
    return FitResult(spec, chain, pred)

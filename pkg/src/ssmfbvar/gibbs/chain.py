"""Gibbs sampler driver."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..aggregation import AggregationScheme
from ..errors import ConfigurationError, NumericalError
from ..priors import PriorSpec
from ..ssm import (
    CompactStateSpace,
    implied_mean,
    is_stationary,
    mean_adjust,
    simulation_smoother,
    steady_state_path,
)
from ..stats import rng_stream
from ..tsdata import MixedPanel
from .config import SamplerConfig
from .niw import lagged, regression_data, step_pi_sigma
from .state import ChainState
from .steady import adapt_mh_scale, step_ng_hierarchy, step_psi
from .volatility import step_volatility

log = logging.getLogger(__name__)

BLOCKS = ("latent", "pi_sigma", "psi", "volatility")


@dataclass
class ChainResult:
    states: list[ChainState]
    config: SamplerConfig
    variant: str
    ids: tuple[str, ...]
    n_m: int
    p: int
    m: int
    last_date: int
    T: int
    batch_acceptance: list[float] = field(default_factory=list)
    acceptance_rate: float | None = None
    mh_scale: float | None = None
    explosive_draws: int = 0
    elapsed: float = 0.0

    @property
    def n(self) -> int:
        return len(self.ids)

    def stack(self, name: str) -> np.ndarray:
        return np.stack([np.asarray(getattr(s, name)) for s in self.states])


def _intercept_start(panel: MixedPanel) -> np.ndarray:
    means = []
    for sid in panel.ids:
        s = panel.series(sid)
        means.append(float(np.mean(s.values[s.observed])) if s.observed.any() else 0.0)
    return np.asarray(means)


def initial_state(panel: MixedPanel, prior: PriorSpec) -> ChainState:
    n, p, m = prior.n, prior.p, prior.m
    minn = prior.steady_state is None
    k = n * p + (m if minn else 0)
    Pi = np.zeros((n, k))
    if minn:
        Pi[:, n * p] = _intercept_start(panel)
        psi = Pi[:, n * p].copy()
    ng = prior.steady_state is not None and prior.steady_state.variant == "normal_gamma"
    if not minn:
        # the hierarchy is updated before psi, and psi == mu_psi exactly is a degenerate start
        psi = _intercept_start(panel) if ng else prior.steady_state.mu_psi.copy()
    csv = prior.csv
    return ChainState(
        Pi=Pi,
        Sigma=prior.niw.S.copy(),
        psi=psi,
        h=np.zeros(panel.T - p),
        z_tail=np.zeros((max(p, 5), n)),
        omega_psi=np.ones(n * m) if ng else None,
        lambda_psi=1.0,
        phi_psi=1.0,
        phi=csv.mu_phi if csv else 0.0,
        sigma2=csv.sigma2_mean if csv else 0.0,
        p=p,
        m=m,
        intercept_form=minn,
    )


def _psi_for_smoother(state: ChainState, prior: PriorSpec) -> np.ndarray:
    if state.intercept_form:
        if prior.m != 1:
            raise ConfigurationError("the intercept model supports a single constant deterministic term")
        return implied_mean(state.Pi, state.intercept[:, 0], prior.p)
    return state.Psi


def run_chain(
    panel: MixedPanel,
    prior: PriorSpec,
    config: SamplerConfig,
    *,
    d: np.ndarray | None = None,
    scheme: AggregationScheme | None = None,
    rng: np.random.Generator | None = None,
    init: ChainState | None = None,
    progress: Callable[[int], None] | None = None,
) -> ChainResult:
    """Run the sampler and return the ``draws - burnin`` kept states.

    Blocks per sweep: latent path, ``(Pi, Sigma)``, steady-state hierarchy and
    ``psi``, volatility. Blocks the model does not have are skipped.
    """
    if prior.n != panel.n:
        raise ConfigurationError(f"prior is for n={prior.n} variables, panel has {panel.n}")
    p, n, m, T = prior.p, prior.n, prior.m, panel.T
    d = np.ones((T, m)) if d is None else np.asarray(d, dtype=float).reshape(T, m)
    css = CompactStateSpace(panel, p, scheme)
    rng = rng or rng_stream(config.seed, config.stream)
    state = init.copy() if init is not None else initial_state(panel, prior)
    ss = prior.steady_state
    ng = ss is not None and ss.variant == "normal_gamma"
    csv = prior.csv
    tail = max(p, 5)

    mh_scale = config.init_mh_scale
    batch_hits = 0
    batch_acceptance: list[float] = []
    kept_hits = 0
    explosive = 0
    kept: list[ChainState] = []
    started = time.perf_counter()

    for it in range(config.draws):
        block = "latent"
        try:
            f = np.exp(state.h)
            Psi = _psi_for_smoother(state, prior)
            y_adj = mean_adjust(panel, Psi, d, css.scheme)
            draw = simulation_smoother(css, y_adj, state.lag_matrix, state.Sigma, f, rng)
            z = draw.z + steady_state_path(Psi, d, T)

            block = "pi_sigma"
            if state.intercept_form:
                Y, X = regression_data(z, p, f, d=d)
            else:
                Y, X = regression_data(z, p, f, mu=steady_state_path(state.Psi, d, T))
            state.Pi, state.Sigma, _ = step_pi_sigma(Y, X, prior.niw, rng)
            state.explosive = not is_stationary(state.lag_matrix, p)

            block = "psi"
            accepted = False
            if ng:
                upd = step_ng_hierarchy(state.psi, ss.mu_psi, state.omega_psi, state.lambda_psi, state.phi_psi,
                                        ss.c0, ss.c1, mh_scale, rng)
                state.omega_psi, state.lambda_psi, state.phi_psi = upd.omega, upd.lambda_psi, upd.phi_psi
                accepted = upd.accepted
            if ss is not None:
                omega = state.omega_psi if ng else ss.omega_psi
                state.psi = step_psi(z, d, state.Pi, state.Sigma, f, ss.mu_psi, omega, p, rng)
            else:
                state.psi = implied_mean(state.Pi, state.intercept[:, 0], p)

            block = "volatility"
            if csv is not None:
                if state.intercept_form:
                    zt, Xr = z, np.concatenate([lagged(z, p), d[p:]], axis=1)
                else:
                    zt = z - steady_state_path(state.Psi, d, T)
                    Xr = lagged(zt, p)
                u = zt[p:] - Xr @ state.Pi.T
                vol = step_volatility(u, state.Sigma, state.h, state.sigma2, csv.mu_phi, csv.omega_phi,
                                      csv.sigma2_mean, csv.d, rng, fixed_sigma2=config.fixed_sigma2)
                state.phi, state.sigma2, state.r, state.h = vol.phi, vol.sigma2, vol.r, vol.h
        except NumericalError as exc:
            raise NumericalError(f"draw {it} failed in block {block}: {exc}", block=block, index=it) from exc

        if ng:
            if it < config.burnin:
                batch_hits += accepted
                if (it + 1) % config.batch_size == 0:
                    k = (it + 1) // config.batch_size
                    frac = batch_hits / config.batch_size
                    batch_acceptance.append(frac)
                    mh_scale = adapt_mh_scale(frac, k, mh_scale, config.target_acceptance, config.max_adapt_step)
                    batch_hits = 0
            else:
                kept_hits += accepted

        if it >= config.burnin:
            state.z_tail = z[-tail:].copy()
            explosive += state.explosive
            snap = state.copy()
            if config.keep_latent:
                snap.z = z.copy()
            else:
                snap.r = None
            kept.append(snap)
        if progress is not None:
            progress(it)

    elapsed = time.perf_counter() - started
    if explosive:
        log.info("%d of %d kept draws have an explosive companion matrix", explosive, len(kept))
    return ChainResult(
        states=kept,
        config=config,
        variant=prior.variant_name,
        ids=panel.ids,
        n_m=panel.n_m,
        p=p,
        m=m,
        last_date=int(panel.last_date),
        T=T,
        batch_acceptance=batch_acceptance,
        acceptance_rate=(kept_hits / config.kept) if ng else None,
        mh_scale=mh_scale if ng else None,
        explosive_draws=explosive,
        elapsed=elapsed,
    )

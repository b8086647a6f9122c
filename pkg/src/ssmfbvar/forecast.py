"""Posterior predictive simulation and summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregation import WINDOW, AggregationScheme, triangular_weights
from .errors import ConfigurationError, DataError
from .gibbs.chain import ChainResult
from .gibbs.state import ChainState
from .ssm import split_lags
from .tsdata import format_month, format_quarter, quarter_end_of

QUANTILES = (0.05, 0.5, 0.95)


@dataclass(frozen=True)
class PredictiveDraws:
    """Predictive paths, one per kept chain draw.

    ``paths[s]`` covers periods ``origin - tail + 1 .. origin + H`` (the first
    ``tail`` rows are the chain's latent draws, including ragged-edge
    imputations). ``f`` holds the simulated volatility for the ``H`` future
    periods. ``step`` is 1 for monthly panels and 3 for pre-aggregated
    quarterly panels.
    """

    ids: tuple[str, ...]
    n_m: int
    origin: int
    paths: np.ndarray
    f: np.ndarray
    tail: int
    step: int = 1
    scheme: AggregationScheme = triangular_weights()

    @property
    def H(self) -> int:
        return self.paths.shape[1] - self.tail

    @property
    def n_draws(self) -> int:
        return self.paths.shape[0]

    @property
    def dates(self) -> np.ndarray:
        return self.origin + self.step * (np.arange(self.paths.shape[1]) - self.tail + 1)

    def is_quarterly(self, sid: str) -> bool:
        return self.ids.index(sid) >= self.n_m

    def _row(self, date: int) -> int:
        off, rem = divmod(int(date) - self.origin, self.step)
        row = off + self.tail - 1
        if rem or not 0 <= row < self.paths.shape[1]:
            raise DataError(f"date {format_month(int(date))} is outside the predictive paths")
        return row

    def horizon_date(self, sid: str, h: int) -> int:
        """Target date of horizon ``h``: month ``origin + h`` for monthly variables,
        quarter-end of the origin's quarter plus ``3h`` months for quarterly ones."""
        if self.is_quarterly(sid):
            return quarter_end_of(self.origin) + 3 * h
        return self.origin + self.step * h

    def max_horizon(self, sid: str) -> int:
        last = self.origin + self.step * self.H
        if self.is_quarterly(sid):
            return (last - quarter_end_of(self.origin)) // 3
        return self.H

    def draws_for(self, ids: Sequence[str], target_date: int) -> np.ndarray:
        """``S x len(ids)`` draws at ``target_date``; quarterly variables are aggregated."""
        cols = []
        for sid in ids:
            j = self.ids.index(sid)
            row = self._row(target_date)
            if j >= self.n_m:
                if row < WINDOW - 1:
                    raise DataError("aggregation window reaches before the stored tail")
                w = self.scheme.array
                cols.append(sum(w[l] * self.paths[:, row - l, j] for l in range(WINDOW)))
            else:
                cols.append(self.paths[:, row, j])
        return np.column_stack(cols)

    def at_horizon(self, ids: Sequence[str], h: int) -> np.ndarray:
        return np.column_stack([self.draws_for([sid], self.horizon_date(sid, h))[:, 0] for sid in ids])

    def quarterly_aggregates(self) -> tuple[np.ndarray, np.ndarray]:
        """Quarter-end dates and aggregates of every quarterly variable for all future quarters."""
        q_ids = self.ids[self.n_m:]
        if not q_ids:
            return np.zeros(0, dtype=int), np.zeros((self.n_draws, 0, 0))
        hmax = self.max_horizon(q_ids[0])
        dates = np.array([quarter_end_of(self.origin) + 3 * h for h in range(hmax + 1)])
        vals = np.stack([self.draws_for(q_ids, int(d)) for d in dates], axis=1)
        return dates, vals


def _stack(states: Sequence[ChainState], name: str) -> np.ndarray:
    return np.stack([np.asarray(getattr(s, name)) for s in states])


def simulate_predictive(
    states: Sequence[ChainState] | ChainResult,
    H: int,
    rng: np.random.Generator,
    *,
    origin: int | None = None,
    ids: Sequence[str] | None = None,
    n_m: int | None = None,
    step: int = 1,
    scheme: AggregationScheme | None = None,
) -> PredictiveDraws:
    """One predictive path of length ``H`` per state.

    ``h_{T+j} = phi h_{T+j-1} + nu``, ``f = exp(h)`` and
    ``z_{T+j} = Psi d + sum_i Pi_i (z_{T+j-i} - Psi d) + sqrt(f) A^{-1} e``.
    The Minnesota model uses its intercept form ``Phi d + sum_i Pi_i z_{T+j-i}``.
    """
    if isinstance(states, ChainResult):
        res = states
        states, origin, ids, n_m = res.states, res.last_date, res.ids, res.n_m
    if H < 1:
        raise ConfigurationError("forecast horizon H must be at least 1")
    if not states:
        raise ConfigurationError("no chain states to simulate from")
    if origin is None or ids is None or n_m is None:
        raise ConfigurationError("origin, ids and n_m are required with a plain state list")
    s0 = states[0]
    S, n, p = len(states), s0.n, s0.p
    tail_len = s0.z_tail.shape[0]
    Pi = _stack(states, "Pi")
    lags = np.stack([split_lags(P, p) for P in Pi])
    chol = np.linalg.cholesky(_stack(states, "Sigma"))
    if s0.intercept_form:
        const = Pi[:, :, n * p]
        mu = np.zeros((S, n))
    else:
        const = np.zeros((S, n))
        mu = _stack(states, "psi")[:, :n]
    phi = np.array([s.phi for s in states])
    sd_h = np.sqrt(np.array([s.sigma2 for s in states]))
    h = np.array([s.h[-1] if s.h.size else 0.0 for s in states])

    paths = np.empty((S, tail_len + H, n))
    paths[:, :tail_len] = _stack(states, "z_tail")
    dev = paths - mu[:, None, :] if not s0.intercept_form else paths.copy()
    f = np.empty((S, H))
    for j in range(H):
        h = phi * h + sd_h * rng.standard_normal(S)
        f[:, j] = np.exp(h)
        t = tail_len + j
        shock = np.einsum("sab,sb->sa", chol, rng.standard_normal((S, n))) * np.sqrt(f[:, j])[:, None]
        acc = const + shock
        for k in range(1, p + 1):
            acc = acc + np.einsum("sab,sb->sa", lags[:, k - 1], dev[:, t - k])
        dev[:, t] = acc
        paths[:, t] = acc + mu if not s0.intercept_form else acc
    return PredictiveDraws(tuple(ids), int(n_m), int(origin), paths, f, tail_len, step,
                           scheme or triangular_weights())


def simulate_path(state: ChainState, H: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Future ``H x n`` path and volatility for a single state (origin bookkeeping not needed)."""
    pd_ = simulate_predictive([state], H, rng, origin=0, ids=tuple(str(i) for i in range(state.n)), n_m=state.n)
    return pd_.paths[0, pd_.tail:], pd_.f[0]


@dataclass(frozen=True)
class ForecastSummary:
    mean: np.ndarray
    cov: np.ndarray
    quantiles: dict[float, np.ndarray]
    singular: bool


def summarize(draws: np.ndarray, quantiles: Sequence[float] = QUANTILES) -> ForecastSummary:
    """Normal fit (mean, unbiased covariance) and empirical quantiles of ``S x k`` draws."""
    x = np.asarray(draws, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DataError("need at least two draws to summarize")
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    singular = bool(np.linalg.matrix_rank(cov) < cov.shape[0]) if np.any(cov) else True
    return ForecastSummary(mean, cov, {q: np.quantile(x, q, axis=0) for q in quantiles}, singular)


def forecast_table(pd_: PredictiveDraws) -> list[dict]:
    """Rows ``(variable, horizon, date, mean, sd, q05, q50, q95)``.

    Monthly variables start at ``h = 0`` (the latent value at the origin;
    zero spread when observed) and quarterly variables at the nowcast.
    """
    rows = []
    for sid in pd_.ids:
        for h in range(0, pd_.max_horizon(sid) + 1):
            date = pd_.horizon_date(sid, h)
            x = pd_.draws_for([sid], date)[:, 0]
            q = np.quantile(x, QUANTILES)
            label = format_quarter(date) if (pd_.is_quarterly(sid) or pd_.step == 3) else format_month(date)
            rows.append({"variable": sid, "horizon": h, "date": label, "mean": float(x.mean()),
                         "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
                         "q05": float(q[0]), "q50": float(q[1]), "q95": float(q[2])})
    return rows


def write_forecast_csv(pd_: PredictiveDraws, path: str | Path) -> None:
    rows = forecast_table(pd_)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["variable", "horizon", "date", "mean", "sd", "q05", "q50", "q95"])
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def save_predictive(pd_: PredictiveDraws, path: str | Path) -> None:
    np.savez(path, paths=pd_.paths, f=pd_.f, ids=np.array(pd_.ids), n_m=pd_.n_m, origin=pd_.origin,
             tail=pd_.tail, step=pd_.step)


def load_predictive(path: str | Path) -> PredictiveDraws:
    with np.load(path) as d:
        return PredictiveDraws(tuple(str(x) for x in d["ids"]), int(d["n_m"]), int(d["origin"]), d["paths"],
                               d["f"], int(d["tail"]), int(d["step"]))

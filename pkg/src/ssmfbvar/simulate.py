"""Synthetic mixed-frequency data from a known steady-state VAR with common stochastic volatility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import WINDOW, AggregationScheme, aggregate_at, triangular_weights
from .errors import ConfigurationError
from .ssm import split_lags, spectral_radius
from .tsdata import MixedPanel, PublicationPattern, as_month


@dataclass(frozen=True)
class DGPConfig:
    """Data-generating process.

    ``Pi`` is ``n x np`` (lag-major), variables ordered monthly first. ``phi``
    and ``sigma2`` drive the volatility; ``sigma2 = 0`` gives constant
    volatility. Volatility is switched on after the first ``p`` sample months
    so the truth matches the estimation convention ``h_{p-1} = 0``.
    """

    Pi: np.ndarray
    Sigma: np.ndarray
    psi: np.ndarray
    n_m: int
    p: int
    T: int
    phi: float = 0.0
    sigma2: float = 0.0
    start: int | str = "2000-01"
    presample: int = 200
    delays: dict = field(default_factory=dict)
    allow_explosive: bool = False

    def __post_init__(self) -> None:
        Pi = np.atleast_2d(np.asarray(self.Pi, dtype=float))
        Sigma = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        psi = np.asarray(self.psi, dtype=float).ravel()
        n = Sigma.shape[0]
        if Pi.shape != (n, n * self.p):
            raise ConfigurationError(f"Pi has shape {Pi.shape}, expected {(n, n * self.p)}")
        if psi.size != n:
            raise ConfigurationError(f"psi has length {psi.size}, expected {n}")
        if not 0 <= self.n_m <= n:
            raise ConfigurationError("n_m out of range")
        if self.T <= self.p + WINDOW:
            raise ConfigurationError("T too short")
        if not abs(self.phi) < 1 or self.sigma2 < 0:
            raise ConfigurationError("volatility process needs |phi| < 1 and sigma2 >= 0")
        if not self.allow_explosive and spectral_radius(Pi, self.p) >= 1.0:
            raise ConfigurationError(
                f"requested VAR is not stationary (spectral radius {spectral_radius(Pi, self.p):.4f}); "
                "set allow_explosive to override"
            )
        object.__setattr__(self, "Pi", Pi)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "start", as_month(self.start))

    @property
    def n(self) -> int:
        return self.Sigma.shape[0]

    def ids(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return tuple(f"m{i + 1}" for i in range(self.n_m)), tuple(f"q{i + 1}" for i in range(self.n - self.n_m))


@dataclass(frozen=True)
class SimulatedData:
    panel: MixedPanel
    z: np.ndarray
    h: np.ndarray
    dgp: DGPConfig
    pattern: PublicationPattern


def simulate_dgp(dgp: DGPConfig, rng: np.random.Generator, scheme: AggregationScheme | None = None) -> SimulatedData:
    """Monthly truth, quarterly aggregates at quarter ends and the ragged edge.

    Quarterly values are emitted only where the aggregation window lies in
    the sample. Series with delay ``k`` lose their last ``k`` months.
    """
    scheme = scheme or triangular_weights()
    n, p, T = dgp.n, dgp.p, dgp.T
    lags = split_lags(dgp.Pi, p)
    C = np.linalg.cholesky(dgp.Sigma)
    total = dgp.presample + T
    h = np.zeros(total)
    for t in range(dgp.presample + p, total):
        h[t] = dgp.phi * h[t - 1] + np.sqrt(dgp.sigma2) * rng.standard_normal()
    zt = np.zeros((total, n))
    for t in range(total):
        e = C @ rng.standard_normal(n)
        acc = np.sqrt(np.exp(h[t])) * e
        for k in range(1, p + 1):
            if t - k >= 0:
                acc = acc + lags[k - 1] @ zt[t - k]
        zt[t] = acc
    z = zt[dgp.presample:] + dgp.psi
    h = h[dgp.presample:]

    dates = np.arange(dgp.start, dgp.start + T)
    m_ids, q_ids = dgp.ids()
    n_m = dgp.n_m
    ym = z[:, :n_m].copy()
    om = np.ones_like(ym, dtype=bool)
    ends = np.flatnonzero((dates % 3 == 2) & (np.arange(T) >= WINDOW - 1))
    yq = np.full((T, n - n_m), np.nan)
    oq = np.zeros((T, n - n_m), dtype=bool)
    if n > n_m:
        yq[ends] = aggregate_at(z[:, n_m:], ends, scheme)
        oq[ends] = True
    pattern = PublicationPattern({str(k): int(v) for k, v in dgp.delays.items()})
    for j, sid in enumerate(m_ids):
        k = pattern.delay(sid)
        if k:
            om[T - k:, j] = False
    for j, sid in enumerate(q_ids):
        k = pattern.delay(sid)
        if k:
            oq[T - k:, j] = False
    panel = MixedPanel(dates, m_ids, q_ids, ym, om, yq, oq)
    return SimulatedData(panel, z, h, dgp, pattern)


def default_dgp(T: int = 200, p: int = 4, csv: bool = True, **overrides) -> DGPConfig:
    """Small stationary system: two monthly variables and one quarterly variable."""
    Pi = np.zeros((3, 3 * p))
    Pi[:, :3] = [[0.5, 0.1, 0.0], [0.1, 0.4, 0.1], [0.1, 0.1, 0.6]]
    Pi[:, 3:6] = [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]]
    Sigma = np.array([[1.0, 0.3, 0.2], [0.3, 1.0, 0.2], [0.2, 0.2, 0.5]])
    kw = dict(Pi=Pi, Sigma=Sigma, psi=np.array([3.0, 1.0, 2.0]), n_m=2, p=p, T=T,
              phi=0.9 if csv else 0.0, sigma2=0.05 if csv else 0.0)
    kw.update(overrides)
    return DGPConfig(**kw)

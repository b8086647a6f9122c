"""Mixed-frequency state-space model and the latent-series simulation smoother.

The latent monthly path ``z~`` (mean-adjusted, ``T x n``, monthly variables
first) follows ``z~_t = sum_k Pi_k z~_{t-k} + u_t`` with ``u_t ~ N(0, f_t Sigma)``
for ``t >= p``; the first ``p`` months get the stationary distribution of the
VAR scaled by ``f_p`` (or a diffuse normal when the VAR is explosive).

Instead of a Kalman recursion over a companion state, the smoother works with
the joint precision of the path, which is block banded with ``p`` off-diagonal
blocks. Observed monthly values are conditioning data; quarterly latents and
missing monthly values (ragged edge, late starts) are the unknowns. Quarterly
observations enter as exact linear constraints, imposed on the unconstrained
draw by conditioning (kriging). The result is an exact draw from
``p(Z | Pi, Sigma, psi, f, Y)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .aggregation import WINDOW, AggregationScheme, triangular_weights
from .errors import ConfigurationError, NumericalError
from .tsdata import MixedPanel

JITTER = 1e-10
STATIONARITY_MARGIN = 1e-6
DIFFUSE_SCALE = 10.0


# --- VAR helpers -------------------------------------------------------------


def split_lags(Pi: np.ndarray, p: int) -> np.ndarray:
    """``(p, n, n)`` array of lag matrices from the ``n x np`` regression matrix."""
    Pi = np.asarray(Pi, dtype=float)
    n = Pi.shape[0]
    if Pi.shape[1] < n * p:
        raise ConfigurationError(f"Pi has {Pi.shape[1]} columns, need at least n*p = {n * p}")
    return Pi[:, : n * p].reshape(n, p, n).transpose(1, 0, 2)


def companion(Pi: np.ndarray, p: int) -> np.ndarray:
    Pi = np.asarray(Pi, dtype=float)
    n = Pi.shape[0]
    F = np.zeros((n * p, n * p))
    F[:n] = Pi[:, : n * p]
    F[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return F


def spectral_radius(Pi: np.ndarray, p: int) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion(Pi, p)))))


def is_stationary(Pi: np.ndarray, p: int) -> bool:
    return spectral_radius(Pi, p) < 1.0 - STATIONARITY_MARGIN


def stationary_covariance(Pi: np.ndarray, Sigma: np.ndarray, p: int) -> np.ndarray:
    """Covariance of the companion state ``(z_t, ..., z_{t-p+1})`` under stationarity."""
    n = Sigma.shape[0]
    F = companion(Pi, p)
    Q = np.zeros((n * p, n * p))
    Q[:n, :n] = Sigma
    G = linalg.solve_discrete_lyapunov(F, Q, method="bilinear")
    return 0.5 * (G + G.T)


def implied_mean(Pi: np.ndarray, intercept: np.ndarray, p: int) -> np.ndarray:
    """Steady state ``(I - sum Pi_k)^{-1} Phi`` of a VAR written with an intercept matrix."""
    lags = split_lags(Pi, p)
    n = lags.shape[1]
    try:
        return np.linalg.solve(np.eye(n) - lags.sum(axis=0), np.asarray(intercept, dtype=float))
    except np.linalg.LinAlgError:
        raise NumericalError("I - sum(Pi_k) is singular; no finite steady state", block="latent") from None


def pi_partitions(Pi: np.ndarray, n_m: int, p: int) -> dict[str, np.ndarray]:
    """Monthly/quarterly partitions ``Pi_mm, Pi_mq, Pi_qm, Pi_qq``, each stacked over lags."""
    lags = split_lags(Pi, p)
    return {
        "mm": lags[:, :n_m, :n_m],
        "mq": lags[:, :n_m, n_m:],
        "qm": lags[:, n_m:, :n_m],
        "qq": lags[:, n_m:, n_m:],
    }


# --- data preparation --------------------------------------------------------


def _deterministic(d: np.ndarray | None, T: int, m: int = 1) -> np.ndarray:
    if d is None:
        return np.ones((T, m))
    d = np.asarray(d, dtype=float)
    if d.ndim == 1:
        d = np.broadcast_to(d, (T, d.size))
    if d.shape[0] != T:
        raise ConfigurationError(f"deterministic terms have {d.shape[0]} rows, expected {T}")
    return d


def steady_state_path(Psi: np.ndarray, d: np.ndarray | None, T: int) -> np.ndarray:
    """``Psi d_t`` for every month, ``T x n``."""
    Psi = np.atleast_2d(np.asarray(Psi, dtype=float))
    if Psi.shape[0] == 1 and Psi.shape[1] != 1:
        Psi = Psi.T
    return _deterministic(d, T, Psi.shape[1]) @ Psi.T


def mean_adjust(
    panel: MixedPanel,
    Psi: np.ndarray,
    d: np.ndarray | None = None,
    scheme: AggregationScheme | None = None,
) -> np.ndarray:
    """Adjusted observations ``T x n`` with NaN where unobserved.

    Monthly entries subtract ``Psi d_t``; quarterly entries subtract the
    aggregation-weighted sum of ``Psi d`` over their five-month window.
    Windows reaching before the sample reuse the first month's terms.
    """
    scheme = scheme or triangular_weights()
    mu = steady_state_path(Psi, d, panel.T)
    out = np.full((panel.T, panel.n), np.nan)
    ym = np.where(panel.obs_monthly, panel.y_monthly, np.nan)
    out[:, : panel.n_m] = ym - mu[:, : panel.n_m]
    if panel.n_q:
        w = scheme.array
        muq = mu[:, panel.n_m:]
        agg = np.zeros_like(muq)
        for lag in range(WINDOW):
            idx = np.maximum(np.arange(panel.T) - lag, 0)
            agg += w[lag] * muq[idx]
        yq = np.where(panel.obs_quarterly, panel.y_quarterly, np.nan)
        out[:, panel.n_m:] = yq - agg
    return out


def reattach_mean(draw: "SmootherDraw | np.ndarray", Psi: np.ndarray, d: np.ndarray | None = None) -> np.ndarray:
    """``z_t = z~_t + Psi d_t``."""
    z = draw.z if isinstance(draw, SmootherDraw) else np.asarray(draw, dtype=float)
    return z + steady_state_path(Psi, d, z.shape[0])


# --- layout ------------------------------------------------------------------


@dataclass(frozen=True)
class SmootherDraw:
    """One draw of the mean-adjusted latent path (``T x n``, observed monthlies filled in)."""

    z: np.ndarray
    latent: np.ndarray
    n_m: int

    @property
    def z_quarterly(self) -> np.ndarray:
        return self.z[:, self.n_m:]

    @property
    def imputed_monthly(self) -> np.ndarray:
        """Monthly block with NaN wherever the value was observed rather than drawn."""
        return np.where(self.latent[:, : self.n_m], self.z[:, : self.n_m], np.nan)


class CompactStateSpace:
    """Static layout of the latent-path problem for one panel and lag order.

    Everything that depends only on the observation pattern is computed once:
    which entries are latent, the band structure of their precision, and the
    exact quarterly constraint matrix.
    """

    def __init__(self, panel: MixedPanel, p: int, scheme: AggregationScheme | None = None):
        if panel.n_q and p < WINDOW - 1:
            raise ConfigurationError(f"p={p} is too short for the five-month aggregation window (need p >= 4)")
        self.p = int(p)
        self.scheme = scheme or triangular_weights()
        self.T, self.n_m, self.n_q = panel.T, panel.n_m, panel.n_q
        self.n = self.n_m + self.n_q
        self.dates = panel.dates
        T, n = self.T, self.n
        if T <= p:
            raise ConfigurationError(f"sample of {T} months is too short for p={p}")

        latent = np.zeros((T, n), dtype=bool)
        latent[:, : self.n_m] = ~panel.obs_monthly
        latent[:, self.n_m:] = True
        self.latent_mask = latent
        flat = latent.ravel()
        self.latent_idx = np.flatnonzero(flat)
        self.observed_idx = np.flatnonzero(~flat)
        self.n_latent = self.latent_idx.size
        pos = np.full(T * n, -1)
        pos[self.latent_idx] = np.arange(self.n_latent)

        # exact constraints: observed quarterly values with a full window in sample
        rows, cols, vals, cons_t, cons_var = [], [], [], [], []
        w = self.scheme.array
        for t, j in zip(*np.nonzero(panel.obs_quarterly)):
            if t < WINDOW - 1:
                continue
            r = len(cons_t)
            for lag in range(WINDOW):
                rows.append(r)
                cols.append(pos[(t - lag) * n + self.n_m + j])
                vals.append(w[lag])
            cons_t.append(int(t))
            cons_var.append(int(j))
        self.constraint_time = np.asarray(cons_t, dtype=int)
        self.constraint_var = np.asarray(cons_var, dtype=int)
        self.n_constraints = len(cons_t)
        G = np.zeros((self.n_constraints, self.n_latent))
        if self.n_constraints:
            G[rows, cols] = vals
        self.G = G

        # band of the latent precision in upper (LAPACK) storage
        if self.n_latent:
            t_of = self.latent_idx // n
            v_of = self.latent_idx % n
            first = np.searchsorted(t_of, t_of - p, side="left")
            self.bandwidth = int(np.max(np.arange(self.n_latent) - first))
            bw = self.bandwidth
            jj, dd = np.meshgrid(np.arange(self.n_latent), np.arange(bw + 1), indexing="ij")
            ii = jj - dd
            ok = ii >= 0
            ii_safe = np.where(ok, ii, 0)
            lag = t_of[jj] - t_of[ii_safe]
            ok &= lag <= p
            s, a, b = t_of[jj], v_of[jj], v_of[ii_safe]
            flat_k = ((s * (p + 1) + lag) * n + a) * n + b
            self._ab_rows = (bw - dd)[ok]
            self._ab_cols = jj[ok]
            self._ab_src = flat_k[ok]
        else:
            self.bandwidth = 0

    @property
    def state_dim(self) -> int:
        """Dimension of the quarterly-only state in the balanced part, ``n_q (p + 1)``."""
        return self.n_q * (self.p + 1)

    @property
    def constraint_values_index(self) -> tuple[np.ndarray, np.ndarray]:
        return self.constraint_time, self.n_m + self.constraint_var

    def time_of_latent(self, k: int) -> int:
        return int(self.latent_idx[min(max(k, 0), self.n_latent - 1)] // self.n)

    # precision of the whole path ----------------------------------------

    def initial_precision(self, Pi: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
        """Precision of ``(z~_0, ..., z~_{p-1})``, time-ordered (``np x np``)."""
        p, n = self.p, self.n
        if is_stationary(Pi, p):
            G = stationary_covariance(Pi, Sigma, p)
            # companion block b holds z_{p-1-b}; reverse to time order
            perm = np.concatenate([np.arange((p - 1 - tau) * n, (p - tau) * n) for tau in range(p)])
            G = G[np.ix_(perm, perm)]
            vals, vecs = np.linalg.eigh(G)
            vals = np.maximum(vals, vals.max() * 1e-12)
            P0 = (vecs / vals) @ vecs.T
            return 0.5 * (P0 + P0.T)
        return np.diag(np.tile(1.0 / (DIFFUSE_SCALE * np.diag(Sigma)), p))

    def precision_band(self, Pi: np.ndarray, Sigma: np.ndarray, f: np.ndarray) -> np.ndarray:
        """``K_band[s, d]`` = block ``(s, s - d)`` of the joint precision of the path."""
        p, n, T = self.p, self.n, self.T
        f = np.asarray(f, dtype=float)
        if f.shape != (T - p,):
            raise ConfigurationError(f"volatility path has length {f.shape}, expected {T - p}")
        if np.any(~(f > 0)):
            raise ConfigurationError("volatility path must be positive")
        lags = split_lags(Pi, p)
        B = np.concatenate([np.eye(n)[None], -lags])
        try:
            Sinv = linalg.cho_solve(linalg.cho_factor(Sigma, lower=True), np.eye(n))
        except np.linalg.LinAlgError:
            raise NumericalError("Sigma is not positive definite", block="latent") from None
        wts = 1.0 / f
        K = np.zeros((T, p + 1, n, n))
        SB = np.einsum("ab,kbc->kac", Sinv, B)
        for j in range(p + 1):
            for k in range(j, p + 1):
                M = B[j].T @ SB[k]
                K[p - j: T - j, k - j] += wts[:, None, None] * M
        # the initial block shares the first modelled month's volatility, so the
        # path law depends on (Sigma, f) only through f_t Sigma
        P0 = self.initial_precision(Pi, Sigma) / f[0]
        for s in range(p):
            for s2 in range(s + 1):
                K[s, s - s2] += P0[s * n: (s + 1) * n, s2 * n: (s2 + 1) * n]
        return K

    def band_matvec(self, K: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Product of the full precision with a path ``x`` (``T x n``)."""
        T = self.T
        y = np.einsum("sab,sb->sa", K[:, 0], x)
        for d in range(1, self.p + 1):
            blk = K[d:, d]
            y[d:] += np.einsum("sab,sb->sa", blk, x[: T - d])
            y[: T - d] += np.einsum("sba,sb->sa", blk, x[d:])
        return y

    def latent_band(self, K: np.ndarray) -> np.ndarray:
        ab = np.zeros((self.bandwidth + 1, self.n_latent))
        ab[self._ab_rows, self._ab_cols] = K.reshape(-1)[self._ab_src]
        return ab


def _factor(ab: np.ndarray, css: CompactStateSpace) -> np.ndarray:
    try:
        return linalg.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError:
        pass
    ab = ab.copy()
    ab[-1] += JITTER
    try:
        return linalg.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError as exc:
        m = re.search(r"(\d+)", str(exc))
        k = int(m.group(1)) - 1 if m else 0
        raise NumericalError("latent precision lost positive definiteness", block="latent",
                             index=css.time_of_latent(k)) from None


def simulation_smoother(
    css: CompactStateSpace,
    y_adj: np.ndarray,
    Pi: np.ndarray,
    Sigma: np.ndarray,
    f: np.ndarray,
    rng: np.random.Generator,
) -> SmootherDraw:
    """Joint draw of all latent entries of the mean-adjusted monthly path.

    ``y_adj`` is the output of :func:`mean_adjust`; ``f`` holds the volatility
    scalars for months ``p..T-1``.
    """
    y_adj = np.asarray(y_adj, dtype=float)
    T, n = css.T, css.n
    z = np.where(css.latent_mask, 0.0, y_adj)
    if np.any(~np.isfinite(z)):
        raise ConfigurationError("observed monthly data must be finite")
    if css.n_latent == 0:
        return SmootherDraw(z, css.latent_mask, css.n_m)

    K = css.precision_band(Pi, Sigma, f)
    ab = css.latent_band(K)
    U = _factor(ab, css)
    rhs = -css.band_matvec(K, z).ravel()[css.latent_idx]
    mean = linalg.cho_solve_banded((U, False), rhs)
    eps = rng.standard_normal(css.n_latent)
    x = mean + linalg.solve_banded((0, css.bandwidth), U, eps)

    if css.n_constraints:
        t_idx, v_idx = css.constraint_values_index
        r = y_adj[t_idx, v_idx]
        W = linalg.cho_solve_banded((U, False), css.G.T)
        GW = css.G @ W
        try:
            corr = linalg.cho_solve(linalg.cho_factor(GW, lower=True), css.G @ x - r)
        except np.linalg.LinAlgError:
            raise NumericalError("quarterly constraint system is singular", block="latent",
                                 index=int(t_idx[0])) from None
        x = x - W @ corr

    flat = z.ravel()
    flat[css.latent_idx] = x
    return SmootherDraw(flat.reshape(T, n), css.latent_mask, css.n_m)


__all__ = [
    "CompactStateSpace",
    "SmootherDraw",
    "companion",
    "implied_mean",
    "is_stationary",
    "mean_adjust",
    "pi_partitions",
    "reattach_mean",
    "simulation_smoother",
    "spectral_radius",
    "split_lags",
    "stationary_covariance",
    "steady_state_path",
]

"""Conditional normal inverse Wishart block for ``(Pi, Sigma)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import NumericalError
from ..priors import NIWPrior
from ..stats import sample_inverse_wishart, sample_pi_matrix


def lagged(z: np.ndarray, p: int) -> np.ndarray:
    """Regressors ``(z_{t-1}', ..., z_{t-p}')`` for ``t = p .. T-1``, lag-major columns."""
    T = z.shape[0]
    return np.concatenate([z[p - k: T - k] for k in range(1, p + 1)], axis=1)


@dataclass(frozen=True)
class NIWPosterior:
    omega_bar_inv: np.ndarray
    precursor: np.ndarray
    Pi_bar: np.ndarray
    S_bar: np.ndarray
    nu_bar: float


def niw_posterior(Y: np.ndarray, X: np.ndarray, prior: NIWPrior) -> NIWPosterior:
    """Posterior moments for ``Y = X Pi' + E`` with rows ``E_t ~ N(0, Sigma)``.

    ``Y`` is ``T x n`` and ``X`` is ``T x k``; ``T = 0`` returns the prior.
    """
    omega_inv = 1.0 / np.asarray(prior.omega_pi, dtype=float)
    Pi0 = np.asarray(prior.Pi_mean, dtype=float)
    Obar_inv = X.T @ X
    Obar_inv[np.diag_indices_from(Obar_inv)] += omega_inv
    precursor = Pi0 * omega_inv + Y.T @ X
    try:
        cf = linalg.cho_factor(Obar_inv, lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("posterior precision of Pi is singular", block="pi_sigma") from None
    Pi_bar = linalg.cho_solve(cf, precursor.T).T
    E = Y - X @ Pi_bar.T
    D = Pi_bar - Pi0
    S_bar = prior.S + E.T @ E + (D * omega_inv) @ D.T
    return NIWPosterior(Obar_inv, precursor, Pi_bar, 0.5 * (S_bar + S_bar.T), prior.nu + Y.shape[0])


def regression_data(
    z: np.ndarray,
    p: int,
    f: np.ndarray,
    mu: np.ndarray | None = None,
    d: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Homoskedastic regression ``(Y, X)`` from the latent path.

    Steady-state models pass ``mu = Psi d_t`` and get the mean-adjusted VAR
    without intercept; the Minnesota model passes ``d`` and gets intercept
    regressors appended. Every row ``t`` is divided by ``sqrt(f_t)``.
    """
    zt = z if mu is None else z - mu
    Y = zt[p:]
    X = lagged(zt, p)
    if d is not None:
        X = np.concatenate([X, np.asarray(d, dtype=float)[p:]], axis=1)
    scale = 1.0 / np.sqrt(np.asarray(f, dtype=float))[:, None]
    return Y * scale, X * scale


def step_pi_sigma(
    Y: np.ndarray,
    X: np.ndarray,
    prior: NIWPrior,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, NIWPosterior]:
    """Draw ``Sigma ~ IW(S_bar, nu_bar)`` and then ``Pi | Sigma`` from the matrix normal."""
    post = niw_posterior(Y, X, prior)
    Sigma = sample_inverse_wishart(post.S_bar, post.nu_bar, rng)
    Pi = sample_pi_matrix(post.precursor, post.omega_bar_inv, Sigma, rng)
    return Pi, Sigma, post

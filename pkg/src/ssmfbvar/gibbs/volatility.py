"""Common stochastic volatility block.

``log f_t = h_t = phi h_{t-1} + nu_t`` with ``h_{-1} = 0`` at the start of the
estimation sample. Given standardized residuals ``zdd_t = chol(Sigma)^{-1} u_t``,
``log(zdd_{it}^2) = h_t + log(e_{it}^2)`` is linear in ``h``; the log chi-square
error is replaced by a ten-component normal mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import NumericalError
from ..stats import sample_truncated_normal

# ten-component approximation of log chi-square(1) (Omori, Chib, Shephard and Nakajima)
MIX_PROB = np.array([0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115])
MIX_MEAN = np.array([1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000])
MIX_VAR = np.array([0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342])

LOG_OFFSET = 1e-10


def mixture_pdf(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)[..., None]
    dens = np.exp(-0.5 * (x - MIX_MEAN) ** 2 / MIX_VAR) / np.sqrt(2.0 * math.pi * MIX_VAR)
    return (MIX_PROB * dens).sum(axis=-1)


def log_chi2_pdf(x: np.ndarray) -> np.ndarray:
    """Density of ``log(e^2)`` for standard normal ``e``."""
    x = np.asarray(x, dtype=float)
    return np.exp(0.5 * (x - np.exp(x))) / math.sqrt(2.0 * math.pi)


def standardized_log_squares(u: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
    """``log(zdd^2 + 1e-10)`` with ``zdd_t = chol(Sigma)^{-1} u_t``; ``u`` is ``T x n``."""
    L = np.linalg.cholesky(Sigma)
    zdd = linalg.solve_triangular(L, u.T, lower=True).T
    return np.log(zdd ** 2 + LOG_OFFSET)


def draw_indicators(ystar: np.ndarray, h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Mixture component (0-based) per entry from its ten-point conditional."""
    resid = (ystar - h[:, None])[..., None] - MIX_MEAN
    logw = np.log(MIX_PROB) - 0.5 * np.log(MIX_VAR) - 0.5 * resid ** 2 / MIX_VAR
    logw -= logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    cum = np.cumsum(w, axis=-1)
    u = rng.random(ystar.shape)[..., None] * cum[..., -1:]
    return np.minimum((u > cum).sum(axis=-1), MIX_PROB.size - 1).astype(np.int8)


def phi_conditional(h: np.ndarray, sigma2: float, mu_phi: float, omega_phi: float) -> tuple[float, float]:
    """Mean and variance of the (untruncated) normal conditional of ``phi``."""
    lag = np.concatenate([[0.0], h[:-1]])
    prec = 1.0 / omega_phi + float(lag @ lag) / sigma2
    var = 1.0 / prec
    return var * (float(lag @ h) / sigma2 + mu_phi / omega_phi), var


def sigma2_conditional(h: np.ndarray, phi: float, sigma2_prior: float, d: float) -> tuple[float, float]:
    """Degrees of freedom and scale sum: ``sigma2 = scale / chi2(dof)``."""
    lag = np.concatenate([[0.0], h[:-1]])
    e = h - phi * lag
    return d + h.size, float(e @ e) + d * sigma2_prior


def draw_h(ystar: np.ndarray, r: np.ndarray, phi: float, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Draw the log-volatility path from its Gaussian conditional (tridiagonal precision)."""
    T = ystar.shape[0]
    v = MIX_VAR[r]
    diag = np.full(T, (1.0 + phi * phi) / sigma2)
    diag[-1] = 1.0 / sigma2
    diag += (1.0 / v).sum(axis=1)
    off = np.full(T, -phi / sigma2)
    off[0] = 0.0
    rhs = ((ystar - MIX_MEAN[r]) / v).sum(axis=1)
    ab = np.vstack([off, diag])
    try:
        U = linalg.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"volatility precision not positive definite ({exc})", block="volatility") from None
    mean = linalg.cho_solve_banded((U, False), rhs)
    return mean + linalg.solve_banded((0, 1), U, rng.standard_normal(T))


@dataclass(frozen=True)
class VolatilityUpdate:
    phi: float
    sigma2: float
    r: np.ndarray
    h: np.ndarray


def step_volatility(
    u: np.ndarray,
    Sigma: np.ndarray,
    h: np.ndarray,
    sigma2: float,
    mu_phi: float,
    omega_phi: float,
    sigma2_prior: float,
    d: float,
    rng: np.random.Generator,
    fixed_sigma2: float | None = None,
) -> VolatilityUpdate:
    """``phi``, then ``sigma2``, then indicators, then ``h``.

    ``u`` holds the VAR residuals ``Pi(L)(z_t - Psi d_t)`` for the months
    covered by ``h``.
    """
    mean, var = phi_conditional(h, sigma2, mu_phi, omega_phi)
    phi = float(sample_truncated_normal(mean, var, -1.0, 1.0, rng))
    if fixed_sigma2 is None:
        dof, scale = sigma2_conditional(h, phi, sigma2_prior, d)
        sigma2 = scale / float(rng.chisquare(dof))
    else:
        sigma2 = float(fixed_sigma2)
    ystar = standardized_log_squares(u, Sigma)
    r = draw_indicators(ystar, h, rng)
    h_new = draw_h(ystar, r, phi, sigma2, rng)
    return VolatilityUpdate(phi, sigma2, r, h_new)

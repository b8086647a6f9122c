"""Steady-state block: ``psi`` and the normal-gamma hierarchy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from ..errors import NumericalError
from ..ssm import split_lags
from ..stats import sample_gig


def build_U(Pi: np.ndarray, p: int, m: int) -> np.ndarray:
    """``U = (I_{nm}, I_m kron Pi_1, ..., I_m kron Pi_p)'`` stacked vertically."""
    lags = split_lags(Pi, p)
    n = lags.shape[1]
    blocks = [np.eye(n * m)] + [np.kron(np.eye(m), lags[k]) for k in range(p)]
    return np.concatenate(blocks, axis=0)


def psi_posterior(
    z: np.ndarray,
    d: np.ndarray,
    Pi: np.ndarray,
    Sigma: np.ndarray,
    f: np.ndarray,
    mu_psi: np.ndarray,
    omega_psi: np.ndarray,
    p: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and precision of ``psi = vec(Psi)``.

    With ``y_t = Pi(L) z_t / sqrt(f_t)`` and
    ``D_t = (d_t', -d_{t-1}', ..., -d_{t-p}')' / sqrt(f_t)``:
    precision ``Omega^{-1} + U'[(sum D_t D_t') kron Sigma^{-1}]U`` and
    mean term ``U' vec(Sigma^{-1} sum y_t D_t') + Omega^{-1} mu``.
    """
    T, n = z.shape
    d = np.asarray(d, dtype=float)
    m = d.shape[1]
    lags = split_lags(Pi, p)
    sq = 1.0 / np.sqrt(np.asarray(f, dtype=float))[:, None]
    y = z[p:].copy()
    for k in range(1, p + 1):
        y -= z[p - k: T - k] @ lags[k - 1].T
    y *= sq
    D = np.concatenate([d[p:]] + [-d[p - k: T - k] for k in range(1, p + 1)], axis=1) * sq
    Sinv = linalg.cho_solve(linalg.cho_factor(Sigma, lower=True), np.eye(n))
    U = build_U(Pi, p, m)
    omega_inv = 1.0 / np.asarray(omega_psi, dtype=float)
    prec = U.T @ np.kron(D.T @ D, Sinv) @ U
    prec[np.diag_indices_from(prec)] += omega_inv
    rhs = U.T @ (Sinv @ y.T @ D).ravel(order="F") + omega_inv * mu_psi
    try:
        cf = linalg.cho_factor(prec, lower=True)
    except np.linalg.LinAlgError:
        raise NumericalError("posterior precision of psi is singular", block="psi") from None
    return linalg.cho_solve(cf, rhs), prec


def step_psi(
    z: np.ndarray,
    d: np.ndarray,
    Pi: np.ndarray,
    Sigma: np.ndarray,
    f: np.ndarray,
    mu_psi: np.ndarray,
    omega_psi: np.ndarray,
    p: int,
    rng: np.random.Generator,
) -> np.ndarray:
    mean, prec = psi_posterior(z, d, Pi, Sigma, f, mu_psi, omega_psi, p)
    L = np.linalg.cholesky(prec)
    return mean + linalg.solve_triangular(L.T, rng.standard_normal(mean.size), lower=False)


# --- normal-gamma hierarchy --------------------------------------------------


def lambda_psi_conditional(omega: np.ndarray, phi_psi: float, c0: float, c1: float) -> tuple[float, float]:
    """Shape and rate of the gamma conditional of ``lambda_psi``."""
    omega = np.asarray(omega, dtype=float)
    return omega.size * phi_psi + c0, 0.5 * phi_psi * float(omega.sum()) + c1


def log_g_phi(phi: float, lam: float, omega: np.ndarray) -> float:
    """Log conditional kernel of ``phi_psi`` (gamma local variances, Exp(1) prior)."""
    omega = np.asarray(omega, dtype=float)
    J = omega.size
    return float(
        J * (phi * math.log(0.5 * lam * phi) - special.gammaln(phi))
        + (phi - 1.0) * np.log(omega).sum()
        - 0.5 * lam * phi * omega.sum()
        - phi
    )


def mh_log_ratio(phi_new: float, phi_old: float, lam: float, omega: np.ndarray) -> float:
    """Log acceptance ratio of the log-scale random walk, Jacobian term included."""
    return log_g_phi(phi_new, lam, omega) - log_g_phi(phi_old, lam, omega) + math.log(phi_new) - math.log(phi_old)


def omega_gig_parameters(psi: np.ndarray, mu_psi: np.ndarray, lam: float, phi: float) -> tuple[float, float, np.ndarray]:
    """GIG parameters ``(phi - 1/2, lambda phi, (psi_j - mu_j)^2)`` of each local variance."""
    return phi - 0.5, lam * phi, (np.asarray(psi, dtype=float) - np.asarray(mu_psi, dtype=float)) ** 2


@dataclass(frozen=True)
class NGUpdate:
    omega: np.ndarray
    lambda_psi: float
    phi_psi: float
    accepted: bool


def step_ng_hierarchy(
    psi: np.ndarray,
    mu_psi: np.ndarray,
    omega: np.ndarray,
    lambda_psi: float,
    phi_psi: float,
    c0: float,
    c1: float,
    mh_scale: float,
    rng: np.random.Generator,
) -> NGUpdate:
    """Update ``lambda_psi``, then ``phi_psi`` (Metropolis), then each ``omega_j``."""
    shape, rate = lambda_psi_conditional(omega, phi_psi, c0, c1)
    lam = float(rng.gamma(shape, 1.0 / rate))

    proposal = phi_psi * math.exp(mh_scale * rng.standard_normal())
    accepted = math.log(rng.random()) < mh_log_ratio(proposal, phi_psi, lam, omega)
    phi = proposal if accepted else phi_psi

    a, b, dev2 = omega_gig_parameters(psi, mu_psi, lam, phi)
    if a <= 0:
        # a zero third parameter is only proper for a > 0
        dev2 = np.maximum(dev2, np.finfo(float).tiny)
    new_omega = np.array([sample_gig(a, b, c, rng) for c in dev2])
    # guard against underflow of a draw that is positive in exact arithmetic
    new_omega = np.maximum(new_omega, np.finfo(float).tiny)
    return NGUpdate(new_omega, lam, phi, accepted)


def adapt_mh_scale(fraction: float, k: int, s: float, target: float = 0.44, max_step: float = 0.01) -> float:
    """Batch adaptation of the random-walk scale on the log scale.

    ``log s`` moves up by ``min(max_step, k^{-1/2})`` when the batch acceptance
    fraction exceeds the target and down otherwise (ties go down).
    """
    delta = min(max_step, k ** -0.5)
    return s * math.exp(delta if fraction > target else -delta)

"""Random variates and densities needed by the Gibbs sampler.

Gamma distributions are shape-rate throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg, special

from .errors import ConfigurationError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, stream)``; identical pairs replay identically."""
    if int(seed) < 0 or int(stream) < 0:
        raise ConfigurationError("seed and stream must be non-negative integers")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def _cholesky(a: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        cond = np.linalg.cond(a)
        raise NumericalError(f"{what} is not positive definite (condition number {cond:.3g})") from None


def sample_gamma(shape: float, rate: float, rng: np.random.Generator) -> float:
    return float(rng.gamma(shape, 1.0 / rate))


def sample_inverse_wishart(S: np.ndarray, nu: float, rng: np.random.Generator) -> np.ndarray:
    """Draw from IW(S, nu) via the Bartlett decomposition of its inverse."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if not nu > n - 1:
        raise ConfigurationError(f"inverse Wishart needs nu > n - 1, got nu={nu}, n={n}")
    L = _cholesky(S, "inverse Wishart scale")
    A = np.zeros((n, n))
    A[np.diag_indices(n)] = np.sqrt(rng.chisquare(nu - np.arange(n)))
    A[np.tril_indices(n, -1)] = rng.standard_normal(n * (n - 1) // 2)
    # Sigma^{-1} = L^{-T} A A' L^{-1}  =>  Sigma = (L A^{-T})(L A^{-T})'
    B = L @ linalg.solve_triangular(A, np.eye(n), lower=True).T
    out = B @ B.T
    return 0.5 * (out + out.T)


def sample_pi_matrix(
    precursor: np.ndarray,
    omega_bar_inv: np.ndarray,
    Sigma: np.ndarray,
    rng: np.random.Generator,
    xi: np.ndarray | None = None,
) -> np.ndarray:
    """Matrix-normal draw of the ``n x k`` coefficient matrix.

    ``precursor`` is ``Pi_prior Omega_prior^{-1} + sum z Z'``. With ``L`` the
    lower Cholesky factor of ``omega_bar_inv`` the draw is
    ``Pi' = L' \\ (L \\ precursor' + xi chol(Sigma)')`` so that
    ``vec(Pi') ~ N(vec(Pi_bar'), Sigma kron Omega_bar)``. ``xi`` (``k x n``)
    may be supplied to fix the noise.
    """
    precursor = np.asarray(precursor, dtype=float)
    n, k = precursor.shape
    L = _cholesky(omega_bar_inv, "posterior precision of Pi")
    C = _cholesky(Sigma, "Sigma")
    if xi is None:
        xi = rng.standard_normal((k, n))
    inner = linalg.solve_triangular(L, precursor.T, lower=True) + xi @ C.T
    return linalg.solve_triangular(L.T, inner, lower=False).T


# --- generalized inverse Gaussian ------------------------------------------------
# Density proportional to y^(a-1) exp{-(b y + c / y) / 2}. Sampling follows the
# ratio-of-uniforms / rejection construction of Hormann and Leydold (2014).


def _gig_mode(lam: float, omega: float) -> float:
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _gig_rou_noshift(lam: float, omega: float, rng: np.random.Generator) -> float:
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * rng.random()
        v = rng.random()
        if u <= 0.0 or v <= 0.0:
            continue
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_rou_shift(lam: float, omega: float, rng: np.random.Generator) -> float:
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    # bounding rectangle from the roots of a depressed cubic
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-(p ** 3) / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = rng.random()
        if v <= 0.0:
            continue
        x = u / v + xm
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_small(lam: float, omega: float, rng: np.random.Generator) -> float:
    # 0 <= lam < 1 and small omega: piecewise hat (constant, power, exponential)
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    A0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1, A1 = 0.0, 0.0
        k2 = x0 ** (lam - 1.0)
        A2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        A1 = k1 * math.log(2.0 / (omega * omega)) if lam == 0.0 else k1 / lam * ((2.0 / omega) ** lam - x0 ** lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        A2 = k2 * 2.0 * math.exp(-1.0) / omega
    total = A0 + A1 + A2
    edge = max(x0, 2.0 / omega)
    while True:
        v = total * rng.random()
        if v <= A0:
            x = x0 * v / A0
            hx = k0
        elif v - A0 <= A1:
            v -= A0
            if lam == 0.0:
                x = omega * math.exp(math.exp(omega) * v)
                hx = k1 / x
            else:
                x = (x0 ** lam + lam / k1 * v) ** (1.0 / lam)
                hx = k1 * x ** (lam - 1.0)
        else:
            v -= A0 + A1
            x = -2.0 / omega * math.log(math.exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v)
            hx = k2 * math.exp(-omega / 2.0 * x)
        if x <= 0.0:
            continue
        u = rng.random() * hx
        if u > 0.0 and math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


def _gig_standard(lam: float, omega: float, rng: np.random.Generator) -> float:
    """One draw with density proportional to x^(lam-1) exp{-omega (x + 1/x) / 2}, lam >= 0."""
    if lam > 2.0 or omega > 3.0:
        return _gig_rou_shift(lam, omega, rng)
    if lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        return _gig_rou_noshift(lam, omega, rng)
    return _gig_small(lam, omega, rng)


_TINY_OMEGA = 1e-6


def _gig_limit_rejection(a: float, b: float, c: float, rng: np.random.Generator) -> float:
    # sqrt(bc) near zero: propose from the one-sided limit law and correct by rejection
    while True:
        if a < 0:
            y = 1.0 / rng.gamma(-a, 2.0 / c)
            if rng.random() <= math.exp(-0.5 * b * y):
                return y
        else:
            y = rng.gamma(a, 2.0 / b)
            if y > 0.0 and rng.random() <= math.exp(-0.5 * c / y):
                return y


def sample_gig(a: float, b: float, c: float, rng: np.random.Generator, size: int | None = None) -> float | np.ndarray:
    """Draw from GIG(a, b, c) with density proportional to ``y^(a-1) exp{-(b y + c/y)/2}``.

    Valid domain: ``b > 0, c > 0`` (any ``a``), ``b > 0, c = 0, a > 0``
    (gamma) or ``b = 0, c > 0, a < 0`` (inverse gamma).
    """
    a, b, c = float(a), float(b), float(c)
    if not (math.isfinite(a) and b >= 0 and c >= 0 and math.isfinite(b) and math.isfinite(c)):
        raise ConfigurationError(f"invalid GIG parameters a={a}, b={b}, c={c}")
    count = 1 if size is None else int(size)
    if c == 0.0:
        if not (b > 0 and a > 0):
            raise ConfigurationError(f"GIG with c=0 needs a > 0 and b > 0 (a={a}, b={b})")
        out = rng.gamma(a, 2.0 / b, size=count)
    elif b == 0.0:
        if not a < 0:
            raise ConfigurationError(f"GIG with b=0 needs a < 0 (a={a})")
        out = 1.0 / rng.gamma(-a, 2.0 / c, size=count)
    else:
        omega = math.sqrt(b * c)
        if omega < _TINY_OMEGA and abs(a) >= 0.05:
            out = np.array([_gig_limit_rejection(a, b, c, rng) for _ in range(count)])
        elif omega == 0.0:
            raise NumericalError(f"GIG parameters underflow (a={a}, b={b}, c={c})", block="gig")
        else:
            alpha = math.sqrt(c / b)
            lam = abs(a)
            draws = np.array([_gig_standard(lam, omega, rng) for _ in range(count)])
            out = alpha / draws if a < 0 else alpha * draws
    return float(out[0]) if size is None else out


def gig_logpdf_unnormalized(y: np.ndarray, a: float, b: float, c: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return (a - 1.0) * np.log(y) - 0.5 * (b * y + c / y)


# --- truncated normal ------------------------------------------------------------


def sample_truncated_normal(
    mu: float,
    var: float,
    lower: float,
    upper: float,
    rng: np.random.Generator,
    size: int | None = None,
) -> float | np.ndarray:
    """Inverse-CDF draw from N(mu, var) restricted to (lower, upper).

    Works on the side of the mean with the smaller tail mass so the CDF
    stays well resolved far into the tails.
    """
    if not var > 0:
        raise ConfigurationError("truncated normal variance must be positive")
    if not lower < upper:
        raise ConfigurationError(f"degenerate truncation interval ({lower}, {upper})")
    sd = math.sqrt(var)
    alpha = (lower - mu) / sd
    beta = (upper - mu) / sd
    u = rng.random(1 if size is None else size)
    if alpha > 0:
        # mass is in the upper tail: work with the reflected variable
        lo, hi = special.ndtr(-beta), special.ndtr(-alpha)
        z = -special.ndtri(lo + u * (hi - lo))
    else:
        lo, hi = special.ndtr(alpha), special.ndtr(beta)
        if hi - lo <= 0.0:
            z = np.full_like(u, alpha if abs(alpha) < abs(beta) else beta)
        else:
            z = special.ndtri(lo + u * (hi - lo))
    z = np.clip(z, alpha, beta)
    out = mu + sd * z
    if np.any(~np.isfinite(out)):
        raise NumericalError("truncated normal draw is not finite", block="truncated_normal")
    return float(out[0]) if size is None else out


# --- densities -------------------------------------------------------------------


def logpdf_normal_mv(y: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    L = _cholesky(cov, "covariance")
    r = linalg.solve_triangular(L, y - mean, lower=True)
    return float(-0.5 * (y.size * LOG_2PI + 2.0 * np.log(np.diag(L)).sum() + r @ r))

"""Prior specifications: Minnesota NIW, steady-state (fixed or normal-gamma), CSV."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .tsdata import MixedPanel

SS_VARIANTS = ("fixed", "normal_gamma")


@dataclass(frozen=True)
class MinnesotaSpec:
    lambda1: float = 0.2
    lambda2: float = 1.0
    s: np.ndarray | None = None
    prior_mean: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.lambda1 > 0:
            raise ConfigurationError("lambda1 must be positive")
        if not self.lambda2 >= 0:
            raise ConfigurationError("lambda2 must be non-negative")
        if self.s is not None:
            s = np.asarray(self.s, dtype=float)
            if s.ndim != 1 or np.any(~(s > 0)):
                raise ConfigurationError("s must be a positive vector")
            object.__setattr__(self, "s", s)


@dataclass(frozen=True)
class NIWPrior:
    S: np.ndarray
    nu: float
    omega_pi: np.ndarray
    Pi_mean: np.ndarray


@dataclass(frozen=True)
class SteadyStatePrior:
    variant: str
    mu_psi: np.ndarray
    omega_psi: np.ndarray | None = None
    c0: float = 0.01
    c1: float = 0.01
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.variant not in SS_VARIANTS:
            raise ConfigurationError(f"unknown steady-state variant {self.variant!r}")
        object.__setattr__(self, "mu_psi", np.asarray(self.mu_psi, dtype=float).ravel())
        if self.omega_psi is not None:
            object.__setattr__(self, "omega_psi", np.asarray(self.omega_psi, dtype=float).ravel())
        if self.variant == "fixed":
            if self.omega_psi is None or np.any(~(self.omega_psi > 0)):
                raise ConfigurationError("omega_psi must be positive for the fixed steady-state prior")
        elif not (self.c0 > 0 and self.c1 > 0):
            raise ConfigurationError("c0 and c1 must be positive")

    @property
    def sd_psi(self) -> np.ndarray | None:
        return None if self.omega_psi is None else np.sqrt(self.omega_psi)


@dataclass(frozen=True)
class CSVPrior:
    mu_phi: float = 0.9
    omega_phi: float = 0.01
    sigma2_mean: float = 0.01
    d: float = 4.0

    def __post_init__(self) -> None:
        if not self.omega_phi > 0:
            raise ConfigurationError("omega_phi must be positive")
        if not self.sigma2_mean > 0:
            raise ConfigurationError("sigma2_mean must be positive")
        if not self.d > 0:
            raise ConfigurationError("d must be positive")


@dataclass(frozen=True)
class PriorSpec:
    """Validated prior bundle for one model.

    ``steady_state=None`` gives the Minnesota model with an intercept;
    ``csv=None`` gives constant volatility.
    """

    n: int
    p: int
    niw: NIWPrior
    steady_state: SteadyStatePrior | None = None
    csv: CSVPrior | None = None
    m: int = 1
    intercept_variance: float = 1e4

    @property
    def variant_name(self) -> str:
        ss = "Minn" if self.steady_state is None else ("SS" if self.steady_state.variant == "fixed" else "SSNG")
        return f"{ss}-{'IW' if self.csv is None else 'CSV'}"


def minnesota_diagonal(spec: MinnesotaSpec, p: int, n: int) -> np.ndarray:
    """Prior variances ``lambda1^2 / (l^lambda2 * s_r)^2``, lag-major (``(l-1) n + r``)."""
    s = np.ones(n) if spec.s is None else np.asarray(spec.s, dtype=float)
    if s.size != n:
        raise ConfigurationError(f"s has length {s.size}, expected {n}")
    lags = np.arange(1, p + 1, dtype=float)
    return (spec.lambda1 ** 2 / (np.outer(lags ** spec.lambda2, s)) ** 2).ravel()


@dataclass(frozen=True)
class US13Entry:
    id: str
    name: str
    frequency: str
    transform: str
    mean: float
    sd: float


US13 = (
    US13Entry("PAYEMS", "Nonfarm payrolls", "monthly", "1200dln", 3.0, 0.5),
    US13Entry("CEU0500000034", "Hours", "monthly", "1200dln", 3.0, 0.5),
    US13Entry("UNRATE", "Unemployment rate", "monthly", "none", 6.0, 1.0),
    US13Entry("FEDFUNDS", "Federal funds rate", "monthly", "none", 5.0, 0.7),
    US13Entry("T10YFF", "Bond spread", "monthly", "monthly average", 1.0, 1.0),
    US13Entry("SP500", "Stock market index", "monthly", "1200dln", 0.0, 2.0),
    US13Entry("PCE", "Personal consumption", "monthly", "1200dln", 3.0, 0.7),
    US13Entry("INDPRO", "Industrial production", "monthly", "1200dln", 3.0, 0.7),
    US13Entry("TCU", "Capacity utilization", "monthly", "none", 80.0, 0.7),
    US13Entry("CPIAUCSL", "CPI inflation", "monthly", "1200dln", 2.0, 0.5),
    US13Entry("PNFI", "Nonresidential inv.", "quarterly", "400dln", 3.0, 1.5),
    US13Entry("PRFI", "Residential inv.", "quarterly", "400dln", 3.0, 1.5),
    US13Entry("GDPC1", "GDP growth", "quarterly", "400dln", 2.0, 0.5),
)


def default_us13_prior(variant: str = "fixed") -> SteadyStatePrior:
    """Steady-state prior means and standard deviations for the 13-variable US panel."""
    mu = np.array([e.mean for e in US13])
    sd = np.array([e.sd for e in US13])
    return SteadyStatePrior(variant, mu, sd ** 2, names=tuple(e.id for e in US13))


def ar_residual_scales(panel: MixedPanel, order: int = 4) -> np.ndarray:
    """Residual standard deviation of an AR(order) with intercept, per series.

    Monthly series use their observed monthly values, quarterly series their
    quarterly observations; gaps break the regression sample.
    """
    out = []
    for sid in panel.ids:
        s = panel.series(sid)
        y = s.values
        rows = [t for t in range(order, len(y)) if s.observed[t - order: t + 1].all()]
        if len(rows) <= order + 2:
            obs = y[s.observed]
            out.append(float(np.std(obs, ddof=1)) if obs.size > 1 else 1.0)
            continue
        Y = y[rows]
        X = np.column_stack([np.ones(len(rows))] + [y[np.asarray(rows) - k] for k in range(1, order + 1)])
        beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
        resid = Y - X @ beta
        sd = float(np.sqrt(resid @ resid / max(len(rows) - order - 1, 1)))
        out.append(sd if sd > 0 else 1.0)
    return np.asarray(out)


def validate(
    *,
    n: int,
    p: int,
    minnesota: MinnesotaSpec,
    steady_state: SteadyStatePrior | None = None,
    csv: CSVPrior | None = None,
    S: np.ndarray | None = None,
    nu: float | None = None,
    m: int = 1,
    intercept_variance: float = 1e4,
) -> PriorSpec:
    """Check dimensions and invariants and assemble a :class:`PriorSpec`.

    Defaults when not given: ``S = diag(s_r^2)`` and ``nu = n + 2``.
    """
    if n < 1 or p < 1 or m < 1:
        raise ConfigurationError("n, p and m must be positive")
    s = np.ones(n) if minnesota.s is None else minnesota.s
    if s.size != n:
        raise ConfigurationError(f"minnesota.s has length {s.size}, expected n={n}")
    S = np.diag(s ** 2) if S is None else np.asarray(S, dtype=float)
    if S.shape != (n, n):
        raise ConfigurationError(f"S has shape {S.shape}, expected {(n, n)}")
    if not np.allclose(S, S.T, rtol=1e-12, atol=1e-12):
        raise ConfigurationError("S must be symmetric")
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ConfigurationError("S must be positive definite") from None
    nu = float(n + 2) if nu is None else float(nu)
    if not nu > n - 1:
        raise ConfigurationError(f"nu={nu} must exceed n - 1 = {n - 1}")
    k = n * p + (m if steady_state is None else 0)
    omega = minnesota_diagonal(minnesota, p, n)
    if steady_state is None:
        omega = np.concatenate([omega, np.full(m, float(intercept_variance))])
    Pi_mean = np.zeros((n, k)) if minnesota.prior_mean is None else np.asarray(minnesota.prior_mean, dtype=float)
    if Pi_mean.shape != (n, k):
        raise ConfigurationError(f"prior_mean has shape {Pi_mean.shape}, expected {(n, k)}")
    if steady_state is not None:
        if steady_state.mu_psi.size != n * m:
            raise ConfigurationError(f"mu_psi has length {steady_state.mu_psi.size}, expected n*m={n * m}")
        if steady_state.omega_psi is not None and steady_state.omega_psi.size != n * m:
            raise ConfigurationError(f"omega_psi has length {steady_state.omega_psi.size}, expected n*m={n * m}")
    return PriorSpec(n=n, p=p, niw=NIWPrior(S, nu, omega, Pi_mean), steady_state=steady_state, csv=csv, m=m,
                     intercept_variance=float(intercept_variance))


def build_prior(
    panel: MixedPanel,
    p: int,
    *,
    ss: str | None = "fixed",
    csv: bool = False,
    mu_psi: Sequence[float] | None = None,
    sd_psi: Sequence[float] | None = None,
    lambda1: float = 0.2,
    lambda2: float = 1.0,
    c0: float = 0.01,
    c1: float = 0.01,
    csv_prior: CSVPrior | None = None,
    s: Sequence[float] | None = None,
) -> PriorSpec:
    """Convenience constructor for one of the Minn/SS/SSNG x IW/CSV models.

    ``ss`` is ``None`` (Minnesota with intercept), ``"fixed"`` or
    ``"normal_gamma"``. Scales ``s_r`` default to AR(4) residual SDs.
    """
    n = panel.n
    scales = ar_residual_scales(panel) if s is None else np.asarray(s, dtype=float)
    steady = None
    if ss is not None:
        if mu_psi is None:
            raise ConfigurationError("steady-state models need prior means mu_psi")
        omega = None if sd_psi is None else np.asarray(sd_psi, dtype=float) ** 2
        if ss == "fixed" and omega is None:
            raise ConfigurationError("the fixed steady-state prior needs prior SDs")
        steady = SteadyStatePrior(ss, np.asarray(mu_psi, dtype=float), omega, c0=c0, c1=c1, names=panel.ids)
    return validate(n=n, p=p, minnesota=MinnesotaSpec(lambda1, lambda2, scales), steady_state=steady,
                    csv=(csv_prior or CSVPrior()) if csv else None)


__all__ = [
    "CSVPrior",
    "MinnesotaSpec",
    "NIWPrior",
    "PriorSpec",
    "SteadyStatePrior",
    "US13",
    "ar_residual_scales",
    "build_prior",
    "default_us13_prior",
    "minnesota_diagonal",
    "validate",
]

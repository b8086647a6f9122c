"""Sampler settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ConfigurationError


@dataclass(frozen=True)
class SamplerConfig:
    """MCMC length, Metropolis adaptation and bookkeeping options.

    ``fixed_sigma2`` pins the volatility innovation variance (the volatility
    block still runs). ``keep_latent`` stores the full latent path and mixture
    indicators in every kept state.
    """

    draws: int = 15000
    burnin: int = 5000
    batch_size: int = 100
    target_acceptance: float = 0.44
    max_adapt_step: float = 0.01
    init_mh_scale: float = 1.0
    seed: int = 0
    stream: int = 0
    fixed_sigma2: float | None = None
    keep_latent: bool = False

    def __post_init__(self) -> None:
        if not (self.draws > self.burnin >= 0):
            raise ConfigurationError(f"need draws > burnin >= 0, got draws={self.draws}, burnin={self.burnin}")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be positive")
        if not 0 < self.target_acceptance < 1:
            raise ConfigurationError("target_acceptance must lie in (0, 1)")
        if not self.init_mh_scale > 0:
            raise ConfigurationError("init_mh_scale must be positive")
        if self.fixed_sigma2 is not None and not self.fixed_sigma2 > 0:
            raise ConfigurationError("fixed_sigma2 must be positive")

    @property
    def kept(self) -> int:
        return self.draws - self.burnin

    def to_dict(self) -> dict:
        return asdict(self)

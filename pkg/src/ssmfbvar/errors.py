"""Exception types raised across the package."""

from __future__ import annotations


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ConfigurationError(ValueError):
    """Invalid model, prior or sampler configuration."""


class NumericalError(ArithmeticError):
    """A factorization or solve failed inside the sampler."""

    def __init__(self, message: str, *, block: str | None = None, index: int | None = None):
        self.block = block
        self.index = index
        parts = [message]
        if block is not None:
            parts.append(f"block={block}")
        if index is not None:
            parts.append(f"index={index}")
        super().__init__(" | ".join(parts))

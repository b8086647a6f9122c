"""Selection and triangular aggregation operators.

The latent quarterly state is the month-on-month growth scaled by three, so
the aggregation weights act on ``(z_t, ..., z_{t-4})`` and sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .tsdata import MixedPanel

WINDOW = 5


@dataclass(frozen=True)
class AggregationScheme:
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.size != WINDOW:
            raise ConfigurationError("aggregation window must have five weights")
        if not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-14):
            raise ConfigurationError("aggregation weights must sum to one")
        if not np.allclose(w, w[::-1], rtol=0, atol=0):
            raise ConfigurationError("aggregation weights must be symmetric")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def triangular_weights() -> AggregationScheme:
    """Weights ``(1, 2, 3, 2, 1) / 9`` on ``(z_t, ..., z_{t-4})``."""
    return AggregationScheme(tuple(np.array([1.0, 2.0, 3.0, 2.0, 1.0]) / 9.0))


@dataclass(frozen=True)
class SelectionPattern:
    """Observed-variable indices per month (quarterly indices offset by ``n_m``)."""

    observed: tuple[tuple[int, ...], ...]
    n_m: int
    n_q: int

    def __post_init__(self) -> None:
        n = self.n_m + self.n_q
        for idx in self.observed:
            if len(set(idx)) != len(idx) or any(not 0 <= i < n for i in idx):
                raise ConfigurationError("selection indices must be unique and within range")

    @classmethod
    def from_panel(cls, panel: MixedPanel) -> "SelectionPattern":
        rows = []
        for t in range(panel.T):
            idx = list(np.flatnonzero(panel.obs_monthly[t]))
            idx += [panel.n_m + j for j in np.flatnonzero(panel.obs_quarterly[t])]
            rows.append(tuple(int(i) for i in idx))
        return cls(tuple(rows), panel.n_m, panel.n_q)


def build_observation_operator(
    observed: tuple[int, ...] | list[int],
    scheme: AggregationScheme,
    n_m: int,
    n_q: int,
    p: int,
) -> np.ndarray:
    """Matrix mapping the stacked state ``(z_t', ..., z_{t-p}')'`` to ``y_t``.

    Monthly rows select ``z_{m,t}``; a quarterly row applies the triangular
    weights to that variable's latent lags ``0..4``.
    """
    if p < WINDOW - 1:
        raise ConfigurationError(f"p={p} is too short for the five-month aggregation window (need p >= 4)")
    n = n_m + n_q
    H = np.zeros((len(observed), n * (p + 1)))
    w = scheme.array
    for row, i in enumerate(observed):
        if i < n_m:
            H[row, i] = 1.0
        else:
            for lag in range(WINDOW):
                H[row, lag * n + i] = w[lag]
    return H


def aggregate_path(z_path: np.ndarray, scheme: AggregationScheme | None = None) -> np.ndarray:
    """Rolling triangular aggregate of a monthly latent path.

    Entry ``k`` of the result is the aggregate for month ``k + 4`` of the
    input (the first month with a full window). Works on 1-d or ``(T, k)``.
    """
    scheme = scheme or triangular_weights()
    z = np.asarray(z_path, dtype=float)
    if z.shape[0] < WINDOW:
        raise DataError(f"path of length {z.shape[0]} is shorter than the aggregation window")
    w = scheme.array
    T = z.shape[0]
    out = np.zeros((T - WINDOW + 1,) + z.shape[1:])
    for lag in range(WINDOW):
        out += w[lag] * z[WINDOW - 1 - lag: T - lag]
    return out


def aggregate_at(z_path: np.ndarray, end_rows: np.ndarray, scheme: AggregationScheme | None = None) -> np.ndarray:
    """Aggregates whose windows end at the given rows of ``z_path``."""
    scheme = scheme or triangular_weights()
    z = np.asarray(z_path, dtype=float)
    end_rows = np.asarray(end_rows, dtype=int)
    if end_rows.size and end_rows.min() < WINDOW - 1:
        raise DataError("aggregation window starts before the path")
    w = scheme.array
    return sum(w[lag] * z[end_rows - lag] for lag in range(WINDOW))

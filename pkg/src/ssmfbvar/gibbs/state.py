"""Chain state."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class ChainState:
    """Parameters and latent quantities after one sweep.

    ``Pi`` is ``n x k`` with lag-major columns (``k = np`` for steady-state
    models, ``np + m`` with trailing intercept columns for the Minnesota
    model). ``psi`` is ``vec(Psi)`` (column-major, length ``n m``); for the
    Minnesota model it holds the implied steady state. ``h`` covers months
    ``p .. T-1`` of the estimation sample. ``z_tail`` keeps the last
    ``max(p, 5)`` months of the (not mean-adjusted) latent path.
    """

    Pi: np.ndarray
    Sigma: np.ndarray
    psi: np.ndarray
    h: np.ndarray
    z_tail: np.ndarray
    omega_psi: np.ndarray | None = None
    lambda_psi: float = 1.0
    phi_psi: float = 1.0
    phi: float = 0.0
    sigma2: float = 0.0
    r: np.ndarray | None = None
    z: np.ndarray | None = None
    explosive: bool = False
    p: int = 1
    m: int = 1
    intercept_form: bool = False

    @property
    def n(self) -> int:
        return self.Sigma.shape[0]

    @property
    def A_inv(self) -> np.ndarray:
        """Lower Cholesky factor of ``Sigma``."""
        return np.linalg.cholesky(self.Sigma)

    @property
    def f(self) -> np.ndarray:
        return np.exp(self.h)

    @property
    def Psi(self) -> np.ndarray:
        return np.asarray(self.psi).reshape(self.m, self.n).T

    @property
    def lag_matrix(self) -> np.ndarray:
        return self.Pi[:, : self.n * self.p]

    @property
    def intercept(self) -> np.ndarray | None:
        """``n x m`` intercept coefficients of the Minnesota model, else ``None``."""
        return self.Pi[:, self.n * self.p:] if self.intercept_form else None

    def copy(self) -> "ChainState":
        return replace(
            self,
            **{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()},
        )

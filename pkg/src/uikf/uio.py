"""Unknown-input observer: the deterministic counterpart of the four-step
filter with a fixed user-supplied gain L instead of a Kalman gain.

Discrete recursion (same first-order discretization as the filter):

    w_k  = A_d x̂_{k-1} + B_d u
    d̂    = F_d (y_k - C w_k)
    z_k  = w_k + E_d d̂
    x̂_k  = z_k + L (y_k - C z_k)

No covariance is computed. With L = C^{-1} in the square case the observer
output equals C^{-1} y exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DiscretizedModel, moore_penrose_pinv


@dataclass(frozen=True)
class ObserverState:
    w: np.ndarray
    z: np.ndarray
    x_hat: np.ndarray
    d_hat: np.ndarray


def initial_observer_state(x0_hat, n_d: int) -> ObserverState:
    """w, z and x̂ all start at the supplied initial estimate."""
    x0 = np.asarray(x0_hat, dtype=float)
    return ObserverState(w=x0.copy(), z=x0.copy(), x_hat=x0.copy(), d_hat=np.zeros(n_d))


def observer_step(
    state: ObserverState,
    y: np.ndarray,
    u: np.ndarray,
    dm: DiscretizedModel,
    C: np.ndarray,
    L: np.ndarray,
    F_d: Optional[np.ndarray] = None,
) -> ObserverState:
    """One observer step; F_d defaults to (C E_d)^+."""
    if F_d is None:
        F_d = moore_penrose_pinv(C @ dm.E_d)
    w = dm.A_d @ state.x_hat + dm.B_d @ np.asarray(u, dtype=float)
    d_hat = F_d @ (y - C @ w)
    z = w + dm.E_d @ d_hat
    x_hat = z + L @ (y - C @ z)
    return ObserverState(w=w, z=z, x_hat=x_hat, d_hat=d_hat)


def verify_observer_stability(
    dm: DiscretizedModel, C: np.ndarray, F_d: np.ndarray, L: np.ndarray
) -> float:
    """Spectral radius of (I - L C) Ā; the observer error dynamics are
    asymptotically stable iff this is below one (constant system)."""
    n_x = dm.A_d.shape[0]
    A_bar = (np.eye(n_x) - dm.E_d @ F_d @ C) @ dm.A_d
    M = (np.eye(n_x) - L @ C) @ A_bar
    return float(np.max(np.abs(np.linalg.eigvals(M))))

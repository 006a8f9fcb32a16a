"""One-step filter for the square case n_x = n_y = n_d.

When the output map and the unknown-input map are both invertible, the
combined gain collapses to C^{-1} regardless of the Kalman gain, so the
whole recursion reduces to x̂ = C^{-1} y with exact error covariance
C^{-1} R C^{-T}. The estimator is always stable and forgets initial
condition errors after the first measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedError
from . import r4skf
from .model import SystemModel

COND_LIMIT = 1e12


@dataclass(frozen=True)
class SquareCaseModel:
    """Square system data: n_x = n_y = n_d = n, C and E invertible."""

    C: np.ndarray
    E: np.ndarray
    R: np.ndarray
    dt: float

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        E = np.asarray(self.E, dtype=float)
        n = C.shape[0]
        if C.shape != (n, n) or E.shape != (n, n):
            raise ValueError("C and E must be square and of equal size")
        for name, M in (("C", C), ("E", E)):
            if np.linalg.cond(M) >= COND_LIMIT:
                raise IllConditionedError(f"{name} is not numerically invertible")


def one_step_estimate(y: np.ndarray, C: np.ndarray) -> np.ndarray:
    """x̂ = C^{-1} y by linear solve (no explicit inverse)."""
    C = np.asarray(C, dtype=float)
    if np.linalg.cond(C) >= COND_LIMIT:
        raise IllConditionedError("C is singular; one-step estimate undefined")
    return np.linalg.solve(C, np.asarray(y, dtype=float))


def one_step_error_cov(C: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Exact estimation error covariance C^{-1} R C^{-T}."""
    C = np.asarray(C, dtype=float)
    if np.linalg.cond(C) >= COND_LIMIT:
        raise IllConditionedError("C is singular")
    X = np.linalg.solve(C, np.asarray(R, dtype=float))
    return np.linalg.solve(C, X.T).T


def equivalence_check(
    model: SystemModel,
    steps: int,
    seed: int,
    x0_hat=None,
    d_scale: float = 1.0,
) -> float:
    """Run the full four-step filter and the one-step estimate on the same
    random measurement stream; return the max per-step scaled deviation
    max_k ||x̂_filter - C^{-1} y|| / (1 + ||C^{-1} y||).
    """
    if not (model.n_x == model.n_y == model.n_d):
        raise ValueError("equivalence_check requires n_x = n_y = n_d")
    rng = np.random.default_rng(seed)
    n_x, n_u, n_d = model.n_x, model.n_u, model.n_d
    x = np.zeros(n_x)
    state = r4skf.initial_state(
        model, np.zeros(n_x) if x0_hat is None else np.asarray(x0_hat, dtype=float)
    )
    dt = model.dt
    worst = 0.0
    for k in range(steps):
        t = k * dt
        A = np.asarray(model.A(t), dtype=float)
        E = np.asarray(model.E(t), dtype=float)
        G = np.asarray(model.G(t), dtype=float)
        Q = np.asarray(model.Q(t), dtype=float)
        C = np.asarray(model.C(k + 1), dtype=float)
        R = np.asarray(model.R(k + 1), dtype=float)
        u = np.zeros(n_u)
        d = d_scale * rng.standard_normal(n_d)
        w = rng.multivariate_normal(np.zeros(Q.shape[0]), Q / dt)
        x = x + dt * (A @ x + E @ d) + G @ w * dt
        v = rng.multivariate_normal(np.zeros(model.n_y), R)
        y = C @ x + v
        state, _ = r4skf.step(state, u, y, model)
        ref = one_step_estimate(y, C)
        dev = np.linalg.norm(state.x_hat - ref) / (1.0 + np.linalg.norm(ref))
        worst = max(worst, dev)
    return worst

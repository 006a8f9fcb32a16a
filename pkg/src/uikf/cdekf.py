"""Continuous-discrete extension for mildly nonlinear plants.

State propagation integrates dx/dt = f(x, u, t) + E d̂ (Euler or RK4);
covariance propagation uses the compensated Euler rule

    P+ = P + [F P + P F^T + F P F^T dt + G Q G^T] dt
       = (I + F dt) P (I + F dt)^T + G Q G^T dt

so on a linear plant with Euler integration the recursion coincides with
the linear four-step filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import RankConditionError
from .model import DiscretizedModel, moore_penrose_pinv, numerical_rank
from . import r4skf
from .r4skf import FilterState, StepReport

FD_STEP = 1e-6


def finite_difference_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central differences with per-component step 1e-6 * (1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fn(x), dtype=float)
    J = np.zeros((f0.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        h = FD_STEP * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(fn(xp), dtype=float) - np.asarray(fn(xm), dtype=float)) / (2 * h)
    return J


@dataclass(frozen=True)
class NonlinearModel:
    """Nonlinear continuous-discrete plant with sampled outputs.

    F and H are the Jacobians of f (w.r.t. x) and h; when omitted they are
    approximated by central finite differences.
    """

    f: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    E: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    dt: float
    F: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    H: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def jac_f(self, x, u, t) -> np.ndarray:
        if self.F is not None:
            return np.asarray(self.F(x, u, t), dtype=float)
        return finite_difference_jacobian(lambda xx: self.f(xx, u, t), x)

    def jac_h(self, x) -> np.ndarray:
        if self.H is not None:
            return np.asarray(self.H(x), dtype=float)
        return finite_difference_jacobian(self.h, x)


def propagate_state(
    x: np.ndarray,
    u: np.ndarray,
    d_hat: np.ndarray,
    model: NonlinearModel,
    method: str = "rk4",
    t: float = 0.0,
) -> np.ndarray:
    """Integrate dx/dt = f(x,u,t) + E d̂ over one sample period; d̂ and u
    are held piecewise constant."""
    E = np.asarray(model.E, dtype=float)
    dt = model.dt

    def rhs(xx, tt):
        return np.asarray(model.f(xx, u, tt), dtype=float) + E @ d_hat

    if method == "euler":
        x_new = x + rhs(x, t) * dt
    elif method == "rk4":
        k1 = rhs(x, t)
        k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(x + dt * k3, t + dt)
        x_new = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    if not np.all(np.isfinite(x_new)):
        raise FloatingPointError("state propagation diverged to non-finite values")
    return x_new


def propagate_covariance(
    P: np.ndarray, F_k: np.ndarray, G: np.ndarray, Q: np.ndarray, dt: float
) -> np.ndarray:
    """Compensated Euler covariance step; the F P F^T dt term makes it the
    exact discretized Lyapunov update (I + F dt) P (I + F dt)^T + G Q G^T dt."""
    P_new = P + (F_k @ P + P @ F_k.T + F_k @ P @ F_k.T * dt + G @ Q @ G.T) * dt
    return 0.5 * (P_new + P_new.T)


def cd_four_step(
    state: FilterState,
    u: np.ndarray,
    y: np.ndarray,
    model: NonlinearModel,
    method: str = "euler",
) -> Tuple[FilterState, StepReport]:
    """Four-step recursion on the linearized plant: A_d = I + F dt,
    E_d = E dt, C = H at the prediction point."""
    t = state.k * model.dt
    dt = model.dt
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    E = np.asarray(model.E, dtype=float)
    G = np.asarray(model.G, dtype=float)
    Q = np.asarray(model.Q, dtype=float)
    R = np.asarray(model.R, dtype=float)
    n_x = state.x_hat.shape[0]
    n_d = E.shape[1]

    F_k = model.jac_f(state.x_hat, u, t)
    dm = DiscretizedModel(
        A_d=np.eye(n_x) + F_k * dt,
        B_d=np.zeros((n_x, u.shape[0])),
        E_d=E * dt,
        G_d=G * dt,
        t=t,
        dt=dt,
    )

    zero_d = np.zeros(n_d)
    x_star = propagate_state(state.x_hat, u, zero_d, model, method=method, t=t)
    C = model.jac_h(x_star)
    if numerical_rank(C @ dm.E_d) < n_d:
        raise RankConditionError("rank(H E_d) < n_d at the linearization point")
    gamma = y - np.asarray(model.h(x_star), dtype=float)
    F_d = moore_penrose_pinv(C @ dm.E_d)
    d_hat = F_d @ gamma
    x_pred = x_star + dm.E_d @ d_hat

    P_pred = propagate_covariance(state.P, F_k, G, Q, dt)
    S = C @ P_pred @ C.T + R
    S = 0.5 * (S + S.T)
    K = np.linalg.solve(S, C @ P_pred).T
    L = K + (np.eye(n_x) - K @ C) @ dm.E_d @ F_d
    innov = y - np.asarray(model.h(x_pred), dtype=float)
    x_hat = x_pred + K @ innov
    ImLC = np.eye(n_x) - L @ C
    P_post = ImLC @ P_pred @ ImLC.T + L @ R @ L.T
    P_post = 0.5 * (P_post + P_post.T)
    Pd = r4skf.unknown_input_error_cov(state.P, dm, C, Q, R, F_d, G=G)
    A_bar, A_tilde, *_ = r4skf.stability_matrices(dm, C, F_d, K)

    new_state = FilterState(x_hat=x_hat, P=P_post, d_hat=d_hat, Pd=Pd, gamma=gamma, k=state.k + 1)
    report = StepReport(
        x_star=x_star,
        x_pred=x_pred,
        d_hat=d_hat,
        F_d=F_d,
        K=K,
        L=L,
        A_bar=A_bar,
        A_tilde=A_tilde,
    )
    return new_state, report

"""Recursive four-step Kalman filter for simultaneous state and
unknown-input estimation.

Per measurement the filter runs:

  1. input-free prediction        x* = A_d x̂ + B_d u
  2. unknown-input extraction     d̂ = (C E_d)^+ (y - C x*)
  3. input-corrected prediction   x̂⁻ = x* + E_d d̂
  4. measurement update           x̂ = x̂⁻ + K (y - C x̂⁻)

with a Joseph-form covariance update built on the combined gain
L = K + (I - K C) E_d F_d, which keeps P symmetric PSD for any gain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionError, IllConditionedError, RankConditionError
from .model import DiscretizedModel, SystemModel, discretize, moore_penrose_pinv, numerical_rank

RCOND_FLOOR = 1e-14
DEFAULT_P0_SCALE = 10.0


@dataclass(frozen=True)
class FilterState:
    """Recursion state after processing measurement k."""

    x_hat: np.ndarray   # x̂_{k|k}
    P: np.ndarray       # state error covariance
    d_hat: np.ndarray   # latest unknown-input estimate (valid for t_{k-1})
    Pd: np.ndarray      # unknown-input error covariance
    gamma: np.ndarray   # latest input-free innovation
    k: int


@dataclass(frozen=True)
class StepReport:
    """Intermediate quantities of one filter step, for diagnostics."""

    x_star: np.ndarray
    x_pred: np.ndarray
    d_hat: np.ndarray
    F_d: np.ndarray
    K: np.ndarray
    L: np.ndarray
    A_bar: np.ndarray
    A_tilde: np.ndarray


def initial_state(model: SystemModel, x0_hat, P0=None, Pd0=None) -> FilterState:
    """Initial filter state; P0 defaults to 10 I, Pd0 to I."""
    x0_hat = np.asarray(x0_hat, dtype=float)
    if P0 is None:
        P0 = DEFAULT_P0_SCALE * np.eye(model.n_x)
    if Pd0 is None:
        Pd0 = np.eye(model.n_d)
    return FilterState(
        x_hat=x0_hat,
        P=np.asarray(P0, dtype=float),
        d_hat=np.zeros(model.n_d),
        Pd=np.asarray(Pd0, dtype=float),
        gamma=np.zeros(model.n_y),
        k=0,
    )


def predict_no_input(x_hat: np.ndarray, u: np.ndarray, dm: DiscretizedModel) -> np.ndarray:
    """Step 1: propagate the estimate assuming d = 0."""
    if x_hat.shape[0] != dm.A_d.shape[0]:
        raise DimensionError("x_hat does not match A_d")
    if u.shape[0] != dm.B_d.shape[1]:
        raise DimensionError("u does not match B_d")
    return dm.A_d @ x_hat + dm.B_d @ u

def estimate_unknown_input(
    y: np.ndarray,
    x_star: np.ndarray,
    dm: DiscretizedModel,
    C: np.ndarray,
    tol: float = 1e-10,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Step 2: extract the unknown input from the input-free innovation.

    Returns (d_hat, F_d, gamma) with F_d = (C E_d)^+ and gamma = y - C x*.
    """
    CEd = C @ dm.E_d
    n_d = dm.E_d.shape[1]
    if numerical_rank(CEd, tol) < n_d:
        raise RankConditionError(
            f"rank(C E_d) = {numerical_rank(CEd, tol)} < n_d = {n_d}; "
            "unknown-input extraction is infeasible at this step"
        )
    gamma = y - C @ x_star
    F_d = moore_penrose_pinv(CEd, tol)
    return F_d @ gamma, F_d, gamma


def predict_with_input(x_star: np.ndarray, d_hat: np.ndarray, dm: DiscretizedModel) -> np.ndarray:
    """Step 3: correct the prediction with the freshly estimated input."""
    return x_star + dm.E_d @ d_hat


def gain_and_covariance(
    P_prev: np.ndarray,
    dm: DiscretizedModel,
    C: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    F_d: np.ndarray,
    G: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Covariance prediction, Kalman gain, combined gain and Joseph update.

    G defaults to G_d / dt (the continuous-time noise matrix). The process
    noise enters as G Q G^T dt, one factor of dt.
    """
    if G is None:
        G = dm.G_d / dm.dt
    P_pred = dm.A_d @ P_prev @ dm.A_d.T + G @ Q @ G.T * dm.dt
    S = C @ P_pred @ C.T + R
    S = 0.5 * (S + S.T)
    if 1.0 / np.linalg.cond(S) < RCOND_FLOOR:
        raise IllConditionedError(
            "innovation covariance C P C^T + R is numerically singular"
        )
    K = np.linalg.solve(S, C @ P_pred).T
    n_x = P_prev.shape[0]
    L = K + (np.eye(n_x) - K @ C) @ dm.E_d @ F_d
    ImLC = np.eye(n_x) - L @ C
    P_post = ImLC @ P_pred @ ImLC.T + L @ R @ L.T
    P_post = 0.5 * (P_post + P_post.T)
    return P_pred, K, L, P_post


def update(x_pred: np.ndarray, y: np.ndarray, K: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Step 4: measurement update of the input-corrected prediction."""
    return x_pred + K @ (y - C @ x_pred)


def stability_matrices(
    dm: DiscretizedModel, C: np.ndarray, F_d: np.ndarray, K: np.ndarray
) -> Tuple[np.ndarray, ...]:
    """Error-dynamics matrices of the predictor and the full filter.

    Predictor:  e⁻_k = Ā e_{k-1} + Ḡ w + D̄ v
    Filter:     e_k  = Ã e_{k-1} + G̃ w + D̃ v

    The predictor (and hence the filter) is asymptotically stable iff the
    spectral radius of Ā (resp. Ã) stays below one.
    """
    n_x = dm.A_d.shape[0]
    M = np.eye(n_x) - dm.E_d @ F_d @ C
    A_bar = M @ dm.A_d
    G_bar = M @ dm.G_d
    D_bar = -dm.E_d @ F_d
    ImKC = np.eye(n_x) - K @ C
    A_tilde = ImKC @ A_bar
    G_tilde = ImKC @ G_bar
    D_tilde = ImKC @ D_bar - K
    return A_bar, A_tilde, G_bar, D_bar, G_tilde, D_tilde


def unknown_input_error_cov(
    P_prev: np.ndarray,
    dm: DiscretizedModel,
    C: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    F_d: np.ndarray,
    G: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Covariance of the unknown-input estimation error d - d̂.

    In quiescence (P small) this reduces to F_d (C G Q G^T C^T dt + R) F_d^T;
    since F_d scales like 1/dt, measurement noise is magnified by 1/dt^2.
    """
    if G is None:
        G = dm.G_d / dm.dt
    mid = (
        C @ dm.A_d @ P_prev @ dm.A_d.T @ C.T
        + C @ G @ Q @ G.T @ C.T * dm.dt
        + R
    )
    Pd = F_d @ mid @ F_d.T
    return 0.5 * (Pd + Pd.T)


def step(
    state: FilterState,
    u: np.ndarray,
    y: np.ndarray,
    model: SystemModel,
    gain_override: Optional[np.ndarray] = None,
) -> Tuple[FilterState, StepReport]:
    """One full four-step recursion processing measurement k = state.k + 1.

    gain_override replaces the Kalman gain in the measurement update (the
    covariance bookkeeping still runs); this is how a fixed observer gain
    is reproduced on the filter code path.
    """
    k1 = state.k + 1
    t = state.k * model.dt
    dm = discretize(model, t)
    C = np.asarray(model.C(k1), dtype=float)
    R = np.asarray(model.R(k1), dtype=float)
    Q = np.asarray(model.Q(t), dtype=float)
    G = np.asarray(model.G(t), dtype=float)

    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)

    x_star = predict_no_input(state.x_hat, u, dm)
    d_hat, F_d, gamma = estimate_unknown_input(y, x_star, dm, C)
    x_pred = predict_with_input(x_star, d_hat, dm)
    Pd = unknown_input_error_cov(state.P, dm, C, Q, R, F_d, G=G)
    _, K, L, P_post = gain_and_covariance(state.P, dm, C, Q, R, F_d, G=G)
    K_used = K if gain_override is None else np.asarray(gain_override, dtype=float)
    x_hat = update(x_pred, y, K_used, C)
    A_bar, A_tilde, *_ = stability_matrices(dm, C, F_d, K_used)

    new_state = FilterState(x_hat=x_hat, P=P_post, d_hat=d_hat, Pd=Pd, gamma=gamma, k=k1)
    report = StepReport(
        x_star=x_star,
        x_pred=x_pred,
        d_hat=d_hat,
        F_d=F_d,
        K=K_used,
        L=L,
        A_bar=A_bar,
        A_tilde=A_tilde,
    )
    return new_state, report

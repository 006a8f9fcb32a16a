"""Continuous-discrete stochastic system model and its first-order discretization.

The plant is

    dx/dt = A(t) x + B(t) u + E(t) d + G(t) w,      w ~ N(0, Q(t))
    y_k   = C_k x_k + v_k,                          v_k ~ N(0, R_k)

where d is an unmeasured exogenous input (disturbance or actuator fault)
with no assumed dynamics. Estimating d through the outputs requires the
structural condition rank(C E) = rank(E) = n_d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DimensionError

MatrixLike = Union[np.ndarray, Callable[[float], np.ndarray]]


def _wrap_time(M, name):
    """Normalize a constant array or callable-of-time to a callable."""
    if callable(M):
        return M
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return lambda _t, _arr=arr: _arr


def _wrap_step(M, name):
    """Normalize a constant array or callable-of-step-index to a callable."""
    if callable(M):
        return M
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return lambda _k, _arr=arr: _arr


@dataclass(frozen=True)
class SystemModel:
    """Continuous-discrete linear plant.

    A, B, E, G, Q are callables of continuous time t (constant matrices are
    wrapped automatically); C and R are callables of the measurement step
    index k. All evaluated matrices are treated as immutable.
    """

    A: MatrixLike
    B: MatrixLike
    E: MatrixLike
    G: MatrixLike
    C: MatrixLike
    Q: MatrixLike
    R: MatrixLike
    dt: float
    n_x: int = 0
    n_u: int = 0
    n_d: int = 0
    n_y: int = 0
    n_w: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "A", _wrap_time(self.A, "A"))
        object.__setattr__(self, "B", _wrap_time(self.B, "B"))
        object.__setattr__(self, "E", _wrap_time(self.E, "E"))
        object.__setattr__(self, "G", _wrap_time(self.G, "G"))
        object.__setattr__(self, "Q", _wrap_time(self.Q, "Q"))
        object.__setattr__(self, "C", _wrap_step(self.C, "C"))
        object.__setattr__(self, "R", _wrap_step(self.R, "R"))

        A0 = np.asarray(self.A(0.0), dtype=float)
        B0 = np.asarray(self.B(0.0), dtype=float)
        E0 = np.asarray(self.E(0.0), dtype=float)
        G0 = np.asarray(self.G(0.0), dtype=float)
        Q0 = np.asarray(self.Q(0.0), dtype=float)
        C0 = np.asarray(self.C(0), dtype=float)
        R0 = np.asarray(self.R(0), dtype=float)

        n_x = A0.shape[0]
        if A0.shape != (n_x, n_x):
            raise DimensionError(f"A must be square, got {A0.shape}")
        for name, M, rows in (("B", B0, n_x), ("E", E0, n_x), ("G", G0, n_x)):
            if M.shape[0] != rows:
                raise DimensionError(f"{name} must have {rows} rows, got {M.shape}")
        if C0.shape[1] != n_x:
            raise DimensionError(f"C must have {n_x} columns, got {C0.shape}")
        n_w = G0.shape[1]
        if Q0.shape != (n_w, n_w):
            raise DimensionError(f"Q must be {n_w}x{n_w}, got {Q0.shape}")
        n_y = C0.shape[0]
        if R0.shape != (n_y, n_y):
            raise DimensionError(f"R must be {n_y}x{n_y}, got {R0.shape}")
        n_d = E0.shape[1]
        if n_d > n_y:
            raise DimensionError(
                f"n_d={n_d} exceeds n_y={n_y}; C@E_d cannot be left-invertible"
            )
        if not np.allclose(Q0, Q0.T):
            raise ValueError("Q must be symmetric")
        if not np.allclose(R0, R0.T):
            raise ValueError("R must be symmetric")
        if np.linalg.eigvalsh(R0).min() <= 0:
            raise ValueError("R must be positive definite")
        if np.linalg.eigvalsh(Q0).min() < -1e-12 * max(1.0, np.abs(Q0).max()):
            raise ValueError("Q must be positive semi-definite")

        object.__setattr__(self, "n_x", n_x)
        object.__setattr__(self, "n_u", B0.shape[1])
        object.__setattr__(self, "n_d", n_d)
        object.__setattr__(self, "n_y", n_y)
        object.__setattr__(self, "n_w", n_w)


@dataclass(frozen=True)
class DiscretizedModel:
    """One-step first-order-hold matrices: A_d = I + A dt, X_d = X dt."""

    A_d: np.ndarray
    B_d: np.ndarray
    E_d: np.ndarray
    G_d: np.ndarray
    t: float
    dt: float


def discretize(model: SystemModel, t: float) -> DiscretizedModel:
    """First-order (Euler) discretization of the plant at step start time t."""
    dt = model.dt
    A = np.asarray(model.A(t), dtype=float)
    return DiscretizedModel(
        A_d=np.eye(model.n_x) + A * dt,
        B_d=np.asarray(model.B(t), dtype=float) * dt,
        E_d=np.asarray(model.E(t), dtype=float) * dt,
        G_d=np.asarray(model.G(t), dtype=float) * dt,
        t=t,
        dt=dt,
    )


def moore_penrose_pinv(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below tol * sigma_max are treated as zero.
    """
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    inv = np.where(s > tol * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T


def numerical_rank(M: np.ndarray, tol: float = 1e-10) -> int:
    """Rank by counting singular values above tol * sigma_max."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def check_rank_condition(C: np.ndarray, E: np.ndarray, tol: float = 1e-10) -> bool:
    """True iff rank(C @ E) = rank(E) = n_d, i.e. every unknown-input
    direction is visible through the outputs in one step."""
    C = np.asarray(C, dtype=float)
    E = np.asarray(E, dtype=float)
    if C.shape[1] != E.shape[0]:
        raise DimensionError(
            f"C has {C.shape[1]} columns but E has {E.shape[0]} rows"
        )
    n_d = E.shape[1]
    return numerical_rank(C @ E, tol) == n_d and numerical_rank(E, tol) == n_d

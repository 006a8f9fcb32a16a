"""Truth simulator, unknown-input signal generators, scenario runner and
RMSE metrics.

The truth is integrated by Euler-Maruyama on the same grid and with the
same first-order discretization as the filters, so discretization error
does not confound estimator comparison. All randomness is derived from
explicit seeds; identical config + seed gives bitwise-identical results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import a2kf, onestep, r4skf, uio
from .a2kf import A2KFConfig
from .errors import ConfigError
from .model import SystemModel, discretize, moore_penrose_pinv

KNOWN_ESTIMATORS = ("r4skf", "a2kf", "onestep", "uio")


@dataclass(frozen=True)
class SignalSpec:
    """Scalar unknown-input signal on a half-open window (t_on, t_off]."""

    kind: str = "zero"              # zero | step | windowed_sine | custom
    t_on: float = 0.0
    t_off: float = 0.0
    amplitude: float = 0.0
    f0: float = 0.0                 # windowed_sine only
    samples: Optional[np.ndarray] = None  # custom: one value per step

    def value(self, t: float, k: Optional[int] = None) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "step":
            return self.amplitude if self.t_on < t <= self.t_off else 0.0
        if self.kind == "windowed_sine":
            if self.t_on < t <= self.t_off:
                return self.amplitude * math.sin(2.0 * math.pi * self.f0 * (t - self.t_on))
            return 0.0
        if self.kind == "custom":
            if self.samples is None:
                raise ConfigError("signals: custom signal requires samples")
            idx = min(k if k is not None else 0, len(self.samples) - 1)
            return float(self.samples[idx])
        raise ConfigError(f"signals.kind: unknown signal kind {self.kind!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    model: SystemModel
    signals: Sequence[SignalSpec]
    duration: float
    seeds: Sequence[int]
    x0_true: np.ndarray
    x0_hat: np.ndarray
    estimators: Sequence[str] = ("r4skf", "a2kf")
    a2kf_config: A2KFConfig = A2KFConfig()
    uio_gain: Optional[np.ndarray] = None   # defaults to pinv(C)
    rmse_skip: float = 0.0                  # seconds excluded from RMSE at the start

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("scenario.duration: must be positive")
        if len(self.seeds) == 0:
            raise ConfigError("scenario.seeds: at least one seed required")
        if len(self.signals) != self.model.n_d:
            raise ConfigError(
                f"scenario.signals: expected {self.model.n_d} entries, got {len(self.signals)}"
            )
        for name in self.estimators:
            if name not in KNOWN_ESTIMATORS:
                raise ConfigError(f"scenario.estimators: unknown estimator {name!r}")
        if "onestep" in self.estimators and not (
            self.model.n_x == self.model.n_y == self.model.n_d
        ):
            raise ConfigError(
                "scenario.estimators: onestep requires the square case n_x = n_y = n_d"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.model.dt))


@dataclass(frozen=True)
class TruthTrajectory:
    t: np.ndarray          # (K+1,) grid including t0 = 0
    x: np.ndarray          # (K+1, n_x)
    d: np.ndarray          # (K, n_d), d[k] is the value driving step k+1
    y: np.ndarray          # (K, n_y), y[k] is the measurement at t[k+1]
    u: np.ndarray          # (K, n_u)


@dataclass
class EstimatorRun:
    x_hat: np.ndarray                       # (K, n_x), estimate after step k
    d_hat: np.ndarray                       # (K, n_d)
    gamma: np.ndarray                       # (K, n_y)
    Pd_diag: Optional[np.ndarray] = None    # (K, n_d), r4skf only
    Qd_diag: Optional[np.ndarray] = None    # (K, n_d), a2kf only


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    truths: Dict[int, TruthTrajectory]
    runs: Dict[int, Dict[str, EstimatorRun]]            # seed -> estimator -> run
    rmse_per_seed: Dict[int, Dict[str, Dict[str, np.ndarray]]]
    rmse_mean: Dict[str, Dict[str, np.ndarray]]         # estimator -> {"x": .., "d": ..}


def rmse(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-channel root mean square error over equal-length series."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ValueError(f"series shapes differ: {est.shape} vs {truth.shape}")
    if est.shape[0] == 0:
        raise ValueError("empty series")
    return np.sqrt(np.mean((est - truth) ** 2, axis=0))


def sample_signals(config: ScenarioConfig) -> np.ndarray:
    """Unknown-input samples d[k] = d(t_k) for k = 0..K-1 (value held over
    the step starting at t_k)."""
    K = config.n_steps
    dt = config.model.dt
    d = np.zeros((K, config.model.n_d))
    for k in range(K):
        t = k * dt
        for j, spec in enumerate(config.signals):
            d[k, j] = spec.value(t, k)
    return d


def cov_factor(M: np.ndarray) -> np.ndarray:
    """Factor S with S S^T = M for sampling; falls back to an eigen
    factorization for semi-definite M."""
    M = np.asarray(M, dtype=float)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        return V * np.sqrt(np.clip(w, 0.0, None))


def generate_truth(config: ScenarioConfig, seed: int) -> TruthTrajectory:
    """Euler-Maruyama forward simulation with w ~ N(0, Q/dt), so the
    discrete process-noise covariance is G Q G^T dt."""
    model = config.model
    K = config.n_steps
    dt = model.dt
    n_x, n_u, n_y = model.n_x, model.n_u, model.n_y
    rng = np.random.default_rng(seed)

    d = sample_signals(config)
    u = np.zeros((K, n_u))
    t_grid = np.arange(K + 1) * dt
    x = np.zeros((K + 1, n_x))
    x[0] = np.asarray(config.x0_true, dtype=float)
    y = np.zeros((K, n_y))

    # keep the keyed array alive so id() stays a valid cache key
    factors: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def factor_of(M: np.ndarray) -> np.ndarray:
        key = id(M)
        if key not in factors:
            factors[key] = (M, cov_factor(M))
        return factors[key][1]

    for k in range(K):
        t = k * dt
        A = np.asarray(model.A(t), dtype=float)
        B = np.asarray(model.B(t), dtype=float)
        E = np.asarray(model.E(t), dtype=float)
        G = np.asarray(model.G(t), dtype=float)
        Q = np.asarray(model.Q(t), dtype=float)
        w = factor_of(Q) @ rng.standard_normal(model.n_w) / math.sqrt(dt)
        drift = A @ x[k] + B @ u[k] + E @ d[k]
        x[k + 1] = x[k] + dt * drift + G @ w * dt
        if not np.all(np.isfinite(x[k + 1])):
            raise FloatingPointError(
                f"truth diverged to non-finite values at step {k + 1}"
            )
        C = np.asarray(model.C(k + 1), dtype=float)
        R = np.asarray(model.R(k + 1), dtype=float)
        v = factor_of(R) @ rng.standard_normal(n_y)
        y[k] = C @ x[k + 1] + v
    return TruthTrajectory(t=t_grid, x=x, d=d, y=y, u=u)


def _run_r4skf(config: ScenarioConfig, truth: TruthTrajectory) -> EstimatorRun:
    model = config.model
    K = config.n_steps
    state = r4skf.initial_state(model, config.x0_hat)
    x_hat = np.zeros((K, model.n_x))
    d_hat = np.zeros((K, model.n_d))
    gamma = np.zeros((K, model.n_y))
    Pd_diag = np.zeros((K, model.n_d))
    for k in range(K):
        state, _ = r4skf.step(state, truth.u[k], truth.y[k], model)
        x_hat[k] = state.x_hat
        d_hat[k] = state.d_hat
        gamma[k] = state.gamma
        Pd_diag[k] = np.diag(state.Pd)
    return EstimatorRun(x_hat=x_hat, d_hat=d_hat, gamma=gamma, Pd_diag=Pd_diag)


def _run_a2kf(config: ScenarioConfig, truth: TruthTrajectory) -> EstimatorRun:
    model = config.model
    K = config.n_steps
    cfg = config.a2kf_config
    state = a2kf.initial_state(model, config.x0_hat, cfg=cfg)
    x_hat = np.zeros((K, model.n_x))
    d_hat = np.zeros((K, model.n_d))
    gamma = np.zeros((K, model.n_y))
    Qd_diag = np.zeros((K, model.n_d))
    for k in range(K):
        state, report = a2kf.a2kf_step(state, truth.u[k], truth.y[k], model, cfg)
        x_hat[k] = state.x_hat
        d_hat[k] = state.d_hat
        gamma[k] = report.gamma
        Qd_diag[k] = np.diag(state.Qd_hat)
    return EstimatorRun(x_hat=x_hat, d_hat=d_hat, gamma=gamma, Qd_diag=Qd_diag)


def _run_onestep(config: ScenarioConfig, truth: TruthTrajectory) -> EstimatorRun:
    model = config.model
    K = config.n_steps
    x_hat = np.zeros((K, model.n_x))
    d_hat = np.zeros((K, model.n_d))
    gamma = np.zeros((K, model.n_y))
    x_prev = np.asarray(config.x0_hat, dtype=float)
    for k in range(K):
        t = k * model.dt
        dm = discretize(model, t)
        C = np.asarray(model.C(k + 1), dtype=float)
        x_star = dm.A_d @ x_prev + dm.B_d @ truth.u[k]
        g = truth.y[k] - C @ x_star
        d_hat[k] = moore_penrose_pinv(C @ dm.E_d) @ g
        gamma[k] = g
        x_hat[k] = onestep.one_step_estimate(truth.y[k], C)
        x_prev = x_hat[k]
    return EstimatorRun(x_hat=x_hat, d_hat=d_hat, gamma=gamma)


def _run_uio(config: ScenarioConfig, truth: TruthTrajectory) -> EstimatorRun:
    model = config.model
    K = config.n_steps
    if config.uio_gain is not None:
        L = np.asarray(config.uio_gain, dtype=float)
    else:
        L = moore_penrose_pinv(np.asarray(model.C(0), dtype=float))
    state = uio.initial_observer_state(config.x0_hat, model.n_d)
    x_hat = np.zeros((K, model.n_x))
    d_hat = np.zeros((K, model.n_d))
    gamma = np.zeros((K, model.n_y))
    for k in range(K):
        t = k * model.dt
        dm = discretize(model, t)
        C = np.asarray(model.C(k + 1), dtype=float)
        gamma[k] = truth.y[k] - C @ (dm.A_d @ state.x_hat + dm.B_d @ truth.u[k])
        state = uio.observer_step(state, truth.y[k], truth.u[k], dm, C, L)
        x_hat[k] = state.x_hat
        d_hat[k] = state.d_hat
    return EstimatorRun(x_hat=x_hat, d_hat=d_hat, gamma=gamma)


_RUNNERS = {
    "r4skf": _run_r4skf,
    "a2kf": _run_a2kf,
    "onestep": _run_onestep,
    "uio": _run_uio,
}


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Drive every selected estimator over the same per-seed measurement
    stream; RMSEs are aggregated as the mean of per-seed RMSEs."""
    model = config.model
    # keep at least one sample when the horizon is shorter than the burn-in
    skip = min(int(round(config.rmse_skip / model.dt)), config.n_steps - 1)
    truths: Dict[int, TruthTrajectory] = {}
    runs: Dict[int, Dict[str, EstimatorRun]] = {}
    rmse_per_seed: Dict[int, Dict[str, Dict[str, np.ndarray]]] = {}

    for seed in config.seeds:
        truth = generate_truth(config, seed)
        truths[seed] = truth
        runs[seed] = {}
        rmse_per_seed[seed] = {}
        for name in config.estimators:
            run = _RUNNERS[name](config, truth)
            runs[seed][name] = run
            rmse_per_seed[seed][name] = {
                "x": rmse(run.x_hat[skip:], truth.x[1:][skip:]),
                "d": rmse(run.d_hat[skip:], truth.d[skip:]),
            }

    rmse_mean: Dict[str, Dict[str, np.ndarray]] = {}
    for name in config.estimators:
        rmse_mean[name] = {
            key: np.mean([rmse_per_seed[s][name][key] for s in config.seeds], axis=0)
            for key in ("x", "d")
        }
    return ScenarioResult(
        config=config,
        truths=truths,
        runs=runs,
        rmse_per_seed=rmse_per_seed,
        rmse_mean=rmse_mean,
    )


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def write_timeseries_csv(path, result: ScenarioResult, estimator: str, seed: Optional[int] = None):
    """One row per step: t, truth state, estimate, truth input, input
    estimate, and for the a2kf the Q^d diagonal."""
    if seed is None:
        seed = result.config.seeds[0]
    truth = result.truths[seed]
    run = result.runs[seed][estimator]
    model = result.config.model
    n_x, n_d = model.n_x, model.n_d
    header = (
        ["t"]
        + [f"x_true{i + 1}" for i in range(n_x)]
        + [f"x_hat{i + 1}" for i in range(n_x)]
        + [f"d_true{j + 1}" for j in range(n_d)]
        + [f"d_hat{j + 1}" for j in range(n_d)]
    )
    if run.Qd_diag is not None:
        header += [f"Qd_diag{j + 1}" for j in range(n_d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(result.config.n_steps):
            row = [_fmt(truth.t[k + 1])]
            row += [_fmt(v) for v in truth.x[k + 1]]
            row += [_fmt(v) for v in run.x_hat[k]]
            row += [_fmt(v) for v in truth.d[k]]
            row += [_fmt(v) for v in run.d_hat[k]]
            if run.Qd_diag is not None:
                row += [_fmt(v) for v in run.Qd_diag[k]]
            writer.writerow(row)


def write_summary_csv(path, results: Dict[str, ScenarioResult]):
    """Summary table: one row per (case, estimator), per-channel RMSEs."""
    first = next(iter(results.values()))
    model = first.config.model
    header = (
        ["case", "estimator"]
        + [f"x{i + 1}" for i in range(model.n_x)]
        + [f"d{j + 1}" for j in range(model.n_d)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for case_name, result in results.items():
            for est in result.config.estimators:
                row = [case_name, est]
                row += [_fmt(v) for v in result.rmse_mean[est]["x"]]
                row += [_fmt(v) for v in result.rmse_mean[est]["d"]]
                writer.writerow(row)

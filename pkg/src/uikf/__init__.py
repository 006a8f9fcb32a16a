"""Simultaneous state and unknown-input estimation for continuous-discrete
stochastic systems: a recursive four-step Kalman filter, a one-step filter
for the square case, an unknown-input observer, and an adaptive augmented
Kalman filter, plus a simulation and benchmarking harness.
"""

from .a2kf import A2KFConfig, A2KFState, a2kf_step, augment, estimate_Qd, innovation_covariance
from .benchmark import benchmark_case, benchmark_model
from .cdekf import NonlinearModel, cd_four_step, propagate_covariance, propagate_state
from .errors import ConfigError, DimensionError, IllConditionedError, RankConditionError
from .model import (
    DiscretizedModel,
    SystemModel,
    check_rank_condition,
    discretize,
    moore_penrose_pinv,
)
from .onestep import SquareCaseModel, equivalence_check, one_step_error_cov, one_step_estimate
from .r4skf import FilterState, StepReport, step
from .sim import ScenarioConfig, ScenarioResult, SignalSpec, generate_truth, rmse, run_scenario
from .uio import ObserverState, observer_step, verify_observer_stability

__version__ = "0.1.0"

__all__ = [
    "A2KFConfig",
    "A2KFState",
    "ConfigError",
    "DimensionError",
    "DiscretizedModel",
    "FilterState",
    "IllConditionedError",
    "NonlinearModel",
    "ObserverState",
    "RankConditionError",
    "ScenarioConfig",
    "ScenarioResult",
    "SignalSpec",
    "SquareCaseModel",
    "StepReport",
    "SystemModel",
    "a2kf_step",
    "augment",
    "benchmark_case",
    "benchmark_model",
    "cd_four_step",
    "check_rank_condition",
    "discretize",
    "equivalence_check",
    "estimate_Qd",
    "generate_truth",
    "innovation_covariance",
    "moore_penrose_pinv",
    "observer_step",
    "one_step_error_cov",
    "one_step_estimate",
    "propagate_covariance",
    "propagate_state",
    "rmse",
    "run_scenario",
    "step",
    "verify_observer_stability",
]

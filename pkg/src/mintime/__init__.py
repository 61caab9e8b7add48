"""Minimum-time control of discrete-time LTI systems through a weighted
sum-of-norms convex relaxation, with an exact feasibility oracle."""

__version__ = "0.1.0"

from .lti import LtiSystem, build_delta, condensed_state, rank_b_full, simulate, spectral_norm
from .sets import AdmissibleSet, Ball2, BallInf, set_from_dict
from .weights import (
    WeightOverflowError,
    WeightSchedule,
    explicit_weights,
    linear_weights,
    normalize,
    theorem1_weights,
)
from .solver import (
    RelaxationProblem,
    SolveOutput,
    SolverConfig,
    SolverError,
    nearest_reaching_controls,
    solve_relaxation,
)
from .oracle import (
    DegenerateSamplingError,
    OracleResult,
    detect_T1,
    estimate_mu,
    feasibility_distance,
    oracle_scan,
)
from .pipeline import PipelineReport, is_bang_bang, run_pipeline
from .mpc import ClosedLoopTrace, MpcConfig, mpc_run, mpc_step
from .estimator import MinimumTimeController

__all__ = [
    "LtiSystem", "simulate", "build_delta", "condensed_state", "rank_b_full", "spectral_norm",
    "AdmissibleSet", "Ball2", "BallInf", "set_from_dict",
    "WeightSchedule", "WeightOverflowError", "linear_weights", "theorem1_weights",
    "explicit_weights", "normalize",
    "RelaxationProblem", "SolveOutput", "SolverConfig", "SolverError",
    "nearest_reaching_controls", "solve_relaxation",
    "OracleResult", "DegenerateSamplingError", "feasibility_distance", "oracle_scan",
    "detect_T1", "estimate_mu",
    "PipelineReport", "run_pipeline", "is_bang_bang",
    "MpcConfig", "ClosedLoopTrace", "mpc_step", "mpc_run",
    "MinimumTimeController",
]

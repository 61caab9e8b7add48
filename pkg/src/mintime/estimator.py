"""Estimator-style front end: configure once, then map states to controls."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .lti import LtiSystem
from .pipeline import PipelineReport, run_pipeline
from .sets import Ball2, BallInf
from .solver import RelaxationProblem, SolverConfig, solve_relaxation
from .weights import explicit_weights, linear_weights, theorem1_weights

__all__ = ["MinimumTimeController"]


class MinimumTimeController(BaseEstimator):
    """Minimum-time state-feedback law ``u = mu(x)`` from the sum-of-norms
    relaxation.

    ``fit`` validates the configuration and precomputes the system and the
    weight schedule; no training data is involved, so ``X`` is ignored.
    ``predict`` maps each row of ``X`` (a state) to the first control of the
    relaxed plan, and zero for states within ``zero_tol`` of the origin.

    Parameters
    ----------
    A, B : array_like
        System matrices.
    set_type : {"ball2", "ballinf"}
    radius : float or array_like
        Ball radius, or per-coordinate box half-widths.
    horizon : int
    weights : {"linear", "theorem1"} or array_like
    weight_slope : float
        Slope ``a`` of linear weights.
    eta, safety : float
        Parameters of the recursive weight schedule.
    rho, eps_abs, eps_rel, max_iters : solver settings
    zero_tol : float or None
        ``None`` uses ``1e-6 * (1 + ||x||)`` per state.
    """

    def __init__(
        self,
        A=None,
        B=None,
        set_type="ball2",
        radius=1.0,
        horizon=10,
        weights="linear",
        weight_slope=1.0,
        eta=1e-2,
        safety=1.01,
        rho=1.0,
        eps_abs=1e-8,
        eps_rel=1e-6,
        max_iters=50000,
        zero_tol=None,
    ):
        self.A = A
        self.B = B
        self.set_type = set_type
        self.radius = radius
        self.horizon = horizon
        self.weights = weights
        self.weight_slope = weight_slope
        self.eta = eta
        self.safety = safety
        self.rho = rho
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iters = max_iters
        self.zero_tol = zero_tol

    def fit(self, X=None, y=None):
        if self.A is None or self.B is None:
            raise ValueError("A and B must be set before fit")
        self.system_ = LtiSystem(self.A, self.B)
        if self.set_type == "ball2":
            self.uset_ = Ball2(float(self.radius), self.system_.n_u)
        elif self.set_type == "ballinf":
            radii = np.broadcast_to(np.asarray(self.radius, dtype=np.float64), (self.system_.n_u,))
            self.uset_ = BallInf(radii.copy())
        else:
            raise ValueError(f"set_type must be 'ball2' or 'ballinf', got {self.set_type!r}")
        if isinstance(self.weights, str):
            if self.weights == "linear":
                self.weights_ = linear_weights(self.weight_slope, self.horizon)
            elif self.weights == "theorem1":
                self.weights_ = theorem1_weights(
                    self.system_, self.uset_, self.eta, self.safety, self.horizon
                )
            else:
                raise ValueError(f"unknown weights {self.weights!r}")
        else:
            self.weights_ = explicit_weights(self.weights)
            if self.weights_.T != self.horizon:
                raise ValueError(f"{self.weights_.T} weights given for horizon {self.horizon}")
        self.solver_config_ = SolverConfig(
            rho=self.rho, eps_abs=self.eps_abs, eps_rel=self.eps_rel, max_iters=self.max_iters
        )
        self.n_features_in_ = self.system_.n
        return self

    def _states(self, X):
        check_is_fitted(self)
        X = check_array(np.atleast_2d(X), dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features; the system has {self.n_features_in_} states")
        return X

    def plan(self, x0):
        """Full relaxed plan from one state, as a ``SolveOutput``."""
        x0 = self._states(x0)[0]
        problem = RelaxationProblem(self.system_, x0, self.uset_, self.weights_)
        return solve_relaxation(problem, self.solver_config_)

    def predict(self, X):
        """First planned control for each state; shape ``(n_samples, n_u)``."""
        X = self._states(X)
        out = np.zeros((X.shape[0], self.system_.n_u))
        for i, x in enumerate(X):
            tol = self.zero_tol if self.zero_tol is not None else 1e-6 * (1.0 + np.linalg.norm(x))
            if np.linalg.norm(x) > tol:
                out[i] = self.plan(x).u[0]
        return out

    def solve(self, x0, **kwargs) -> PipelineReport:
        """Relax and certify from ``x0``; keyword arguments go to ``run_pipeline``."""
        x0 = self._states(x0)[0]
        kwargs.setdefault("zero_tol", self.zero_tol)
        return run_pipeline(
            self.system_, self.uset_, x0, self.weights_, cfg=self.solver_config_, **kwargs
        )

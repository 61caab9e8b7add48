"""Receding-horizon minimum-time control.

At absolute time ``t`` the relaxation is solved over ``tau`` steps from the
measured state with weights ``w(t+1), ..., w(t+tau)`` and the first control
of the returned block is applied. With ``resolve_period = p`` the problem is
only re-solved every ``p`` steps; in between the stored block is consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import check_horizon, check_positive, check_vector
from .lti import LtiSystem
from .oracle import default_tolerance
from .sets import AdmissibleSet
from .solver import RelaxationProblem, SolverConfig, solve_relaxation
from .weights import WeightSchedule, explicit_weights, linear_weights

__all__ = ["MpcConfig", "ClosedLoopTrace", "mpc_step", "mpc_run", "default_tau"]


def _unit_linear(T: int) -> WeightSchedule:
    return linear_weights(1.0, T)


def default_tau(n: int) -> int:
    """Heuristic horizon ``n + 3``; the horizon only has to exceed ``n``."""
    return n + 3


@dataclass(frozen=True)
class MpcConfig:
    """Settings of the receding-horizon loop.

    ``weight_base(L)`` must return a schedule of length ``L``; step ``t``
    uses its entries ``t+1 .. t+tau`` (absolute time), or ``1 .. tau`` when
    ``relative_time`` is set. ``tau=None`` means :func:`default_tau`.
    ``zero_tol=None`` means ``1e-6 * (1 + ||x0||)``.
    """

    tau: int | None = None
    resolve_period: int = 1
    max_steps: int = 100
    zero_tol: float | None = None
    weight_base: Callable[[int], WeightSchedule] = _unit_linear
    relative_time: bool = False

    def __post_init__(self):
        if self.tau is not None:
            check_horizon(self.tau, "tau")
            if not 1 <= check_horizon(self.resolve_period, "resolve_period") <= self.tau:
                raise ValueError(
                    f"resolve_period must lie in [1, tau={self.tau}], got {self.resolve_period}"
                )
        else:
            check_horizon(self.resolve_period, "resolve_period")
        check_horizon(self.max_steps, "max_steps", minimum=0)
        if self.zero_tol is not None:
            check_positive(self.zero_tol, "zero_tol")

    def horizon(self, n: int) -> int:
        tau = default_tau(n) if self.tau is None else self.tau
        if tau <= n:
            raise ValueError(f"tau must exceed the state dimension n={n}, got tau={tau}")
        if self.resolve_period > tau:
            raise ValueError(f"resolve_period must lie in [1, tau={tau}], got {self.resolve_period}")
        return tau

    def step_weights(self, t_abs: int, tau: int) -> WeightSchedule:
        if self.relative_time:
            base = self.weight_base(tau)
            return base
        base = self.weight_base(t_abs + tau)
        if base.T != t_abs + tau:
            raise ValueError(f"weight_base returned {base.T} weights, expected {t_abs + tau}")
        return explicit_weights(base.w[t_abs:])


@dataclass(eq=False)
class ClosedLoopTrace:
    """Closed-loop run.

    ``states`` has shape ``(K + 1, n)`` and ``inputs`` ``(K, n_u)``;
    ``solve_times`` lists the steps at which the relaxation was re-solved.
    ``reached_zero_at`` is the first step with ``||x|| <= zero_tol``.
    """

    states: np.ndarray
    inputs: np.ndarray
    solve_times: list = field(default_factory=list)
    reached_zero_at: int | None = None
    zero_tol: float = 0.0
    tau: int = 0
    iterations: list = field(default_factory=list)


def mpc_step(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x_current,
    t_abs: int,
    cfg: MpcConfig,
    solver_cfg: SolverConfig | None = None,
    *,
    warm_start=None,
    zero_tol: float | None = None,
):
    """Control block ``u(t|t), ..., u(t+tau-1|t)`` of shape ``(tau, n_u)``.

    A state with ``||x|| <= zero_tol`` gets the all-zero block without a
    solve. Returns ``(block, iterations)``.
    """
    x = check_vector(x_current, "x_current", sys.n)
    t_abs = check_horizon(t_abs, "t_abs", minimum=0)
    tau = cfg.horizon(sys.n)
    if zero_tol is None:
        zero_tol = cfg.zero_tol if cfg.zero_tol is not None else default_tolerance(x)
    if np.linalg.norm(x) <= zero_tol:
        return np.zeros((tau, sys.n_u)), 0
    problem = RelaxationProblem(sys, x, uset, cfg.step_weights(t_abs, tau))
    out = solve_relaxation(problem, solver_cfg, warm_start)
    return out.u, out.iterations


def mpc_run(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x0,
    cfg: MpcConfig | None = None,
    solver_cfg: SolverConfig | None = None,
) -> ClosedLoopTrace:
    """Run the receding-horizon loop from ``x0``.

    Stops at the first state with ``||x|| <= zero_tol`` (the policy applies
    zero from then on) or after ``max_steps`` inputs.
    """
    cfg = MpcConfig() if cfg is None else cfg
    x0 = check_vector(x0, "x0", sys.n)
    tau = cfg.horizon(sys.n)
    zero_tol = cfg.zero_tol if cfg.zero_tol is not None else default_tolerance(x0)

    states = [x0]
    inputs = []
    solve_times = []
    iterations = []
    block = None
    used = 0
    reached = None
    x = x0
    for step in range(cfg.max_steps + 1):
        if np.linalg.norm(x) <= zero_tol:
            reached = step
            break
        if step == cfg.max_steps:
            break
        if step % cfg.resolve_period == 0:
            warm = None
            if block is not None:
                warm = np.zeros_like(block)
                warm[: tau - used] = block[used:]
            block, its = mpc_step(
                sys, uset, x, step, cfg, solver_cfg, warm_start=warm, zero_tol=zero_tol
            )
            solve_times.append(step)
            iterations.append(its)
            used = 0
        u = block[used]
        used += 1
        # same recurrence as lti.simulate, so the trace re-simulates bit-for-bit
        x = sys.A @ x + sys.B @ u
        states.append(x)
        inputs.append(u)

    return ClosedLoopTrace(
        states=np.array(states),
        inputs=np.array(inputs).reshape(len(inputs), sys.n_u),
        solve_times=solve_times,
        reached_zero_at=reached,
        zero_tol=zero_tol,
        tau=tau,
        iterations=iterations,
    )

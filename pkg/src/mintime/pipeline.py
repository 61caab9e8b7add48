"""End-to-end minimum-time synthesis: relax, detect the zero time, certify."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_horizon, check_positive, check_vector
from .lti import LtiSystem, rank_b_full
from .oracle import (
    OracleResult,
    default_tolerance,
    detect_T1,
    estimate_mu,
    feasibility_distance,
    oracle_scan,
)
from .sets import AdmissibleSet
from .solver import RelaxationProblem, SolveOutput, SolverConfig, solve_relaxation
from .weights import WeightSchedule

__all__ = ["PipelineReport", "run_pipeline", "is_bang_bang", "BANG_BANG_TOL"]

BANG_BANG_TOL = 1e-6


@dataclass(eq=False)
class PipelineReport:
    relaxation: SolveOutput
    T1: int | None
    certified: bool
    t_star: int | None
    oracle: OracleResult
    uniqueness_hint: bool
    bang_bang: bool
    feas_tol: float
    zero_tol: float
    mu_lower_bound: float | None = None
    condition12_refuted: bool | None = None
    certificate: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.relaxation.u.shape[0]


def is_bang_bang(uset: AdmissibleSet, u, tol: float = BANG_BANG_TOL) -> bool:
    """True when every control in ``u`` lies on the boundary of ``uset``."""
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        return True
    return bool(np.all(uset.boundary_gap(u) <= tol))


def run_pipeline(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x0,
    weights: WeightSchedule,
    T: int | None = None,
    cfg: SolverConfig | None = None,
    *,
    feas_tol: float | None = None,
    zero_tol: float | None = None,
    T_max: int | None = None,
    bisect: bool = False,
    mu_samples: int = 0,
    rng=None,
    warm_start=None,
) -> PipelineReport:
    """Solve the relaxation over horizon ``T = len(weights)`` and certify it.

    The detected zero time ``T1`` is certified when ``d(T1) <= feas_tol``
    and ``d(T1 - 1) > feas_tol``, both from the exact oracle. The oracle
    scan for ``t_star`` runs up to ``T_max`` (default ``T``). When
    ``mu_samples > 0`` the ratio refuter is evaluated at
    ``max(t_star - 1, 1)``, the smallest admissible index.
    """
    x0 = check_vector(x0, "x0", sys.n)
    if T is not None and check_horizon(T) != weights.T:
        raise ValueError(f"horizon T={T} does not match {weights.T} weights")
    T = weights.T
    feas_tol = default_tolerance(x0) if feas_tol is None else check_positive(feas_tol, "feas_tol")
    zero_tol = default_tolerance(x0) if zero_tol is None else check_positive(zero_tol, "zero_tol")

    relax = solve_relaxation(RelaxationProblem(sys, x0, uset, weights), cfg, warm_start)
    T1 = detect_T1(relax.x, zero_tol)
    oracle = oracle_scan(sys, uset, x0, T if T_max is None else T_max, feas_tol, bisect=bisect, cfg=cfg)

    def distance(t):
        if t == 0:
            return float(np.linalg.norm(x0))
        if t not in oracle.distances:
            oracle.distances[t] = feasibility_distance(sys, uset, x0, t, cfg).distance
            oracle.distances = dict(sorted(oracle.distances.items()))
        return oracle.distances[t]

    certificate = {}
    if T1 is None:
        certified = False
    elif T1 == 0:
        certificate = {"d_T1": distance(0)}
        certified = certificate["d_T1"] <= feas_tol
    else:
        certificate = {"d_T1": distance(T1), "d_T1_minus_1": distance(T1 - 1)}
        certified = certificate["d_T1"] <= feas_tol and certificate["d_T1_minus_1"] > feas_tol

    active = relax.u if T1 is None else relax.u[:T1]
    report = PipelineReport(
        relaxation=relax,
        T1=T1,
        certified=bool(certified),
        t_star=oracle.t_star,
        oracle=oracle,
        uniqueness_hint=rank_b_full(sys),
        bang_bang=is_bang_bang(uset, active),
        feas_tol=feas_tol,
        zero_tol=zero_tol,
        certificate=certificate,
    )
    if mu_samples and oracle.t_star:
        mu = estimate_mu(sys, uset, weights, max(oracle.t_star - 1, 1), T, mu_samples, rng)
        report.mu_lower_bound = mu
        report.condition12_refuted = mu >= 0.5
    return report

"""Exact minimum-time oracle and the Monte-Carlo refuter for the
uniqueness/exactness ratio.

The minimum time is the first horizon ``t`` at which the origin is
reachable, i.e. ``d(t) = min_{u in U^t} ||A^t x0 + Delta_t u||`` vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_horizon, check_positive, check_vector
from .lti import LtiSystem, simulate
from .sets import AdmissibleSet
from .solver import (
    RelaxationProblem,
    SolverConfig,
    nearest_reaching_controls,
    solve_relaxation,
)
from .weights import WeightSchedule, explicit_weights

__all__ = [
    "FeasibilityResult",
    "OracleResult",
    "DegenerateSamplingError",
    "default_tolerance",
    "feasibility_distance",
    "oracle_scan",
    "detect_T1",
    "estimate_mu",
]


class DegenerateSamplingError(RuntimeError):
    """Every Monte-Carlo draw produced a zero denominator."""


def default_tolerance(x0) -> float:
    return 1e-6 * (1.0 + float(np.linalg.norm(x0)))


class FeasibilityResult(NamedTuple):
    distance: float
    witness: np.ndarray
    status: str


@dataclass
class OracleResult:
    """Outcome of :func:`oracle_scan`.

    ``t_star`` is ``None`` when the origin is unreachable within ``T_max``.
    ``distances`` maps each scanned horizon to ``d(t)``.
    """

    t_star: int | None
    witness: np.ndarray | None
    distances: dict = field(default_factory=dict)
    feas_tol: float = 0.0
    T_max: int = 0

    @property
    def reachable(self) -> bool:
        return self.t_star is not None


def feasibility_distance(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x0,
    t: int,
    cfg: SolverConfig | None = None,
) -> FeasibilityResult:
    """``d(t)`` and a minimizing input sequence of shape ``(t, n_u)``.

    An exact reaching sequence is looked for first; when none exists the
    relaxation is solved with weights ``(0, ..., 0, 1)``, whose optimal
    value is ``d(t)`` itself.
    """
    x0 = check_vector(x0, "x0", sys.n)
    t = check_horizon(t, "t")
    if not np.any(x0):
        return FeasibilityResult(0.0, np.zeros((t, sys.n_u)), "exact")
    head = nearest_reaching_controls(sys, uset, x0, t)
    if head is not None:
        return FeasibilityResult(float(np.linalg.norm(simulate(sys, x0, head)[-1])), head, "exact")
    w = np.zeros(t)
    w[-1] = 1.0
    out = solve_relaxation(RelaxationProblem(sys, x0, uset, explicit_weights(w)), cfg)
    return FeasibilityResult(float(np.linalg.norm(out.x[-1])), out.u, out.status)


def oracle_scan(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x0,
    T_max: int,
    feas_tol: float | None = None,
    *,
    bisect: bool = False,
    cfg: SolverConfig | None = None,
) -> OracleResult:
    """Smallest ``t <= T_max`` with ``d(t) <= feas_tol``.

    The default scan is ascending. ``bisect=True`` uses that reachability is
    monotone in ``t`` (zero inputs keep the state at the origin) and only
    evaluates ``O(log T_max)`` horizons.
    """
    x0 = check_vector(x0, "x0", sys.n)
    T_max = check_horizon(T_max, "T_max")
    feas_tol = default_tolerance(x0) if feas_tol is None else check_positive(feas_tol, "feas_tol")
    result = OracleResult(None, None, {}, feas_tol, T_max)
    if np.linalg.norm(x0) <= feas_tol:
        result.t_star, result.witness = 0, np.zeros((0, sys.n_u))
        return result

    cache = {}

    def feasible(t):
        if t not in cache:
            cache[t] = feasibility_distance(sys, uset, x0, t, cfg)
            result.distances[t] = cache[t].distance
        return cache[t].distance <= feas_tol

    if bisect:
        if feasible(T_max):
            lo, hi = 0, T_max  # infeasible at lo (or lo == 0), feasible at hi
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if feasible(mid):
                    hi = mid
                else:
                    lo = mid
            result.t_star = hi
    else:
        for t in range(1, T_max + 1):
            if feasible(t):
                result.t_star = t
                break
    if result.t_star is not None:
        result.witness = cache[result.t_star].witness
    result.distances = dict(sorted(result.distances.items()))
    return result


def detect_T1(x, zero_tol: float) -> int | None:
    """Smallest ``T1`` with ``||x(t)|| <= zero_tol`` for every ``t >= T1``.

    ``x`` has shape ``(T + 1, n)``; returns ``None`` if ``x(T)`` is not zero.
    """
    zero_tol = check_positive(zero_tol, "zero_tol")
    norms = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=np.float64)), axis=1)
    big = np.flatnonzero(norms > zero_tol)
    if big.size == 0:
        return 0
    if big[-1] == norms.size - 1:
        return None
    return int(big[-1]) + 1


def estimate_mu(
    sys: LtiSystem,
    uset: AdmissibleSet,
    weights: WeightSchedule | np.ndarray,
    T1: int,
    T: int,
    num_samples: int,
    rng=None,
    *,
    chunk_size: int = 4096,
    return_running: bool = False,
):
    """Monte-Carlo lower bound on ``sup rho_T1(u) / rho_T(u)`` over ``u`` in
    ``(U - U)^T``, where ``rho_k(u) = sum_{t<=k} w(t) ||Delta_t u_t||``.

    A value ``>= 1/2`` shows the sufficient exactness condition fails for
    this ``T1``; a smaller value proves nothing. Samples are drawn in chunks,
    each from its own child stream spawned from ``rng`` (a seed or
    ``numpy.random.Generator``), so results depend only on the seed.

    With ``return_running=True`` the running maximum over samples is
    returned as well (NaN until the first usable sample).
    """
    T = check_horizon(T, "T")
    T1 = check_horizon(T1, "T1")
    if T1 > T:
        raise ValueError(f"T1={T1} exceeds T={T}")
    num_samples = check_horizon(num_samples, "num_samples")
    w = np.asarray(getattr(weights, "w", weights), dtype=np.float64)
    if w.size < T:
        raise ValueError(f"need {T} weights, got {w.size}")
    w = w[:T]
    diff = uset.self_difference()
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n_chunks = -(-num_samples // chunk_size)
    ratios = []
    for k, child in enumerate(gen.spawn(n_chunks)):
        size = min(chunk_size, num_samples - k * chunk_size)
        u = diff.sample_uniform(child, size=size * T).reshape(size, T, sys.n_u)
        state = np.zeros((size, sys.n))
        norms = np.empty((size, T))
        for t in range(T):
            state = state @ sys.A.T + u[:, t] @ sys.B.T
            norms[:, t] = np.linalg.norm(state, axis=1)
        rho = np.cumsum(norms * w, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios.append(np.where(rho[:, -1] > 0, rho[:, T1 - 1] / rho[:, -1], np.nan))
    ratios = np.concatenate(ratios)
    if np.all(np.isnan(ratios)):
        raise DegenerateSamplingError("rho_T vanished for every sample")
    best = float(np.nanmax(ratios))
    if return_running:
        running = np.fmax.accumulate(ratios)
        return best, running
    return best

"""Operator-splitting solver for the weighted sum-of-norms relaxation

    minimize    sum_{t=1}^T w(t) ||x(t)||_2
    subject to  x(t+1) = A x(t) + B u(t),  x(0) = x0,  u(t) in U.

The splitting alternates a Euclidean projection onto the affine dynamics
set (a banded KKT solve, factorized once per ``(A, B, T)``) with the
separable proximal step: block soft-thresholding on each state block and
projection onto ``U`` on each input block.

Splitting methods only reach the nonsmooth kinks at ``x(t) = 0`` up to the
stopping tolerance, so a converged iterate is finished off by
:func:`nearest_reaching_controls`: the exact projection of the iterate onto
the controls that reach the origin at the detected zero time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import check_horizon, check_positive, check_sequence, check_vector
from .lti import LtiSystem, build_delta, simulate
from .sets import AdmissibleSet
from .weights import WeightSchedule

__all__ = [
    "SolverConfig",
    "RelaxationProblem",
    "SolveOutput",
    "SolverError",
    "DynamicsProjector",
    "project_dynamics",
    "block_soft_threshold",
    "nearest_reaching_controls",
    "solve_relaxation",
    "objective",
]

logger = logging.getLogger(__name__)

_RHO_PERIOD = 10
_RHO_MU = 10.0
_RHO_TAU = 2.0
_RHO_RANGE = 1e6
_RHO_MAX_UPDATES = 20
_POLISH_SMALL = 1e-4  # in the scaled units where ||x0|| < 1


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    eps_abs: float = 1e-8
    eps_rel: float = 1e-6
    max_iters: int = 50000
    over_relaxation: float = 1.6
    polish: bool = True
    adaptive_rho: bool = True

    def __post_init__(self):
        check_positive(self.rho, "rho")
        check_positive(self.eps_abs, "eps_abs")
        check_positive(self.eps_rel, "eps_rel")
        check_horizon(self.max_iters, "max_iters")
        if not 1.0 <= self.over_relaxation <= 1.9:
            raise ValueError(f"over_relaxation must lie in [1, 1.9], got {self.over_relaxation}")

    def tightened(self, factor: float = 10.0) -> "SolverConfig":
        return SolverConfig(
            self.rho,
            self.eps_abs / factor,
            self.eps_rel / factor,
            self.max_iters,
            self.over_relaxation,
            self.polish,
            self.adaptive_rho,
        )


@dataclass(frozen=True, eq=False)
class RelaxationProblem:
    sys: LtiSystem
    x0: np.ndarray
    uset: AdmissibleSet
    weights: WeightSchedule

    def __post_init__(self):
        object.__setattr__(self, "x0", check_vector(self.x0, "x0", self.sys.n))
        if self.uset.n_u != self.sys.n_u:
            raise ValueError(
                f"admissible set has dimension {self.uset.n_u}, system has {self.sys.n_u} inputs"
            )

    @property
    def T(self) -> int:
        return self.weights.T


@dataclass(eq=False)
class SolveOutput:
    """Result of :func:`solve_relaxation`.

    ``u`` has shape ``(T, n_u)`` and lies in ``U`` exactly; ``x`` has shape
    ``(T + 1, n)`` and is the forward simulation of ``u`` from ``x0``.
    ``polished_at`` is the zero time used by the final exact projection, or
    ``None`` when the raw splitting iterate was kept.
    """

    u: np.ndarray
    x: np.ndarray
    objective: float
    iterations: int
    status: str
    primal_residual: float
    dual_residual: float
    polished_at: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def objective(x: np.ndarray, w: np.ndarray) -> float:
    """``sum_{t=1}^T w(t) ||x(t)||_2`` for a state array of shape ``(T+1, n)``."""
    return float(np.dot(w, np.linalg.norm(x[1:], axis=1)))


def block_soft_threshold(v, lam):
    """Proximal operator of ``lam * ||.||_2``.

    ``v`` may be a single vector or a stack of row vectors; ``lam`` is a
    scalar or one threshold per row.
    """
    v = np.asarray(v, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("threshold must be nonnegative")
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    lam = lam[..., None] if lam.ndim and v.ndim > 1 else lam
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(nrm > lam, 1.0 - lam / nrm, 0.0)
    return v * factor


class DynamicsProjector:
    """Euclidean projection onto ``{(x, u) : x(t+1) = A x(t) + B u(t)}``.

    With ``C z = d`` the stacked dynamics for ``z = (x(1..T), u(0..T-1))``,
    the projection is ``z_hat - C' (C C')^{-1} (C z_hat - d)``. ``C C'`` is
    block tridiagonal (diagonal ``I + B B' [+ A A']``, off-diagonal ``-A'``)
    so its Cholesky factor is stored in banded form.
    """

    def __init__(self, sys: LtiSystem, T: int):
        self.sys = sys
        self.T = T = check_horizon(T)
        n = sys.n
        A, B = sys.A, sys.B
        AAt, BBt = A @ A.T, B @ B.T
        bw = 2 * n - 1
        size = T * n
        dense = np.zeros((size, size))
        for t in range(T):
            blk = slice(t * n, (t + 1) * n)
            dense[blk, blk] = np.eye(n) + BBt + (AAt if t > 0 else 0.0)
            if t + 1 < T:
                nxt = slice((t + 1) * n, (t + 2) * n)
                dense[blk, nxt] = -A.T
                dense[nxt, blk] = -A
        ab = np.zeros((bw + 1, size))
        for k in range(min(bw, size - 1) + 1):
            ab[bw - k, k:] = np.diagonal(dense, k)
        try:
            self._chol = sla.cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - C C' is always SPD
            raise SolverError("dynamics KKT factorization failed") from exc

    def residual(self, x0, x, u):
        A, B = self.sys.A, self.sys.B
        prev = np.vstack([x0[None, :], x[:-1]])
        return x - prev @ A.T - u @ B.T

    def project(self, x0, x_hat, u_hat):
        """Return the projected ``(x, u)`` with shapes ``(T, n)`` and ``(T, n_u)``."""
        A, B = self.sys.A, self.sys.B
        r = self.residual(x0, x_hat, u_hat)
        lam = sla.cho_solve_banded((self._chol, False), r.ravel()).reshape(r.shape)
        # C' lam: x(t) appears in row t-1 with +I and in row t with -A
        gx = lam.copy()
        gx[:-1] -= lam[1:] @ A
        gu = -lam @ B
        return x_hat - gx, u_hat - gu


def project_dynamics(sys: LtiSystem, x0, x_hat, u_hat):
    """One-shot form of :meth:`DynamicsProjector.project`."""
    x0 = check_vector(x0, "x0", sys.n)
    x_hat = check_sequence(x_hat, "x_hat", sys.n)
    u_hat = check_sequence(u_hat, "u_hat", sys.n_u, x_hat.shape[0])
    return DynamicsProjector(sys, x_hat.shape[0]).project(x0, x_hat, u_hat)


def _free_coordinates(uset: AdmissibleSet, u: np.ndarray, margin: float) -> np.ndarray:
    slack = uset.slack(u)
    if slack.shape == u.shape:
        return slack > margin
    return np.repeat((slack > margin)[:, None], u.shape[1], axis=1)


def _restricted_correction(D, c, u, uset, margin, tol):
    # Least-norm move of the coordinates with slack, others frozen on the boundary.
    free = _free_coordinates(uset, u, margin).ravel()
    if not free.any():
        return None
    flat = u.ravel()
    Df = D[:, free]
    step, *_ = np.linalg.lstsq(Df @ Df.T, c - D @ flat, rcond=None)
    cand = flat.copy()
    cand[free] += Df.T @ step
    cand = cand.reshape(u.shape)
    if not np.array_equal(uset.project(cand), cand):
        return None
    if np.linalg.norm(D @ cand.ravel() - c) > tol:
        return None
    return cand


def nearest_reaching_controls(
    sys: LtiSystem,
    uset: AdmissibleSet,
    x0,
    t: int,
    anchor=None,
    *,
    tol: float | None = None,
    max_iter: int = 100,
):
    """Closest sequence to ``anchor`` in ``U^t`` that drives ``x0`` to zero at ``t``.

    Solves ``min ||u - anchor||^2 s.t. Delta_t u = -A^t x0, u(k) in U`` by a
    regularized semismooth Newton method on the dual, finishing with a
    restricted least-norm correction when strict complementarity fails.
    Returns an array of shape ``(t, n_u)`` or ``None`` when no such sequence
    was found (in particular when the origin is not reachable at ``t``).
    """
    x0 = check_vector(x0, "x0", sys.n)
    t = check_horizon(t, "t")
    m = sys.n_u
    anchor = np.zeros((t, m)) if anchor is None else check_sequence(anchor, "anchor", m, t)
    anchor = uset.project(anchor)
    D = build_delta(sys, t)
    c = -sys.power(t) @ x0
    scale = 1.0 + np.linalg.norm(x0)
    if tol is None:
        tol = 1e-12 * (scale + np.linalg.norm(c))
    margin = 1e-9 * uset.radius_bound()

    def evaluate(nu):
        v = anchor - (D.T @ nu).reshape(t, m)
        u = uset.project(v)
        g = D @ u.ravel() - c
        q = 0.5 * np.sum((u - anchor) ** 2) + nu @ g
        return v, u, g, q

    nu = np.zeros(sys.n)
    v, u, g, q = evaluate(nu)
    for _ in range(max_iter):
        gn = np.linalg.norm(g)
        if gn <= tol:
            return u
        if gn <= 1e-3 * scale:
            fixed = _restricted_correction(D, c, u, uset, margin, tol)
            if fixed is not None:
                return fixed
        DJ = np.hstack([D[:, k * m:(k + 1) * m] @ uset.projection_jacobian(v[k]) for k in range(t)])
        H = DJ @ D.T
        reg = 1e-2 * min(1.0, gn) + 1e-14 * (1.0 + np.trace(H))
        d = np.linalg.solve(H + reg * np.eye(sys.n), g)
        slope = g @ d
        step = 1.0
        for _ in range(60):
            v2, u2, g2, q2 = evaluate(nu + step * d)
            if q2 >= q + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return None
        nu = nu + step * d
        v, u, g, q = v2, u2, g2, q2
        if not np.all(np.isfinite(nu)) or np.linalg.norm(nu) > 1e15 * scale:
            return None
    return None


def _rho_update(r_pri: float, r_dual: float, drift: float) -> float:
    """Residual balancing: grow rho when the primal residual dominates,
    shrink it when the dual one does, within ``_RHO_RANGE`` of the start."""
    if r_pri > _RHO_MU * r_dual and drift * _RHO_TAU <= _RHO_RANGE:
        return _RHO_TAU
    if r_dual > _RHO_MU * r_pri and drift / _RHO_TAU >= 1.0 / _RHO_RANGE:
        return 1.0 / _RHO_TAU
    return 1.0


def _polish_start(y_x: np.ndarray, small: float) -> int | None:
    """First time ``t`` (1-based) from which every split state block has
    norm at most ``small``, or ``None`` if the last block exceeds it."""
    big = np.flatnonzero(np.linalg.norm(y_x, axis=1) > small)
    if big.size == 0:
        return 1
    if big[-1] == y_x.shape[0] - 1:
        return None
    return int(big[-1]) + 2


def solve_relaxation(
    problem: RelaxationProblem,
    cfg: SolverConfig | None = None,
    warm_start=None,
) -> SolveOutput:
    """Solve the sum-of-norms relaxation by over-relaxed scaled ADMM.

    The penalty starts at ``cfg.rho`` and, unless ``cfg.adaptive_rho`` is
    off, is rebalanced every few iterations from the residual ratio (a
    deterministic rule; the dynamics factorization does not depend on rho).

    The problem is rescaled by ``1 + ||x0||`` and the weights by the
    geometric mean of the positive ones before iterating, so results are
    invariant to a positive rescaling of the weights. ``warm_start`` is an optional input sequence
    of shape ``(T, n_u)`` used to initialize the split variables.
    """
    cfg = SolverConfig() if cfg is None else cfg
    sys, uset, T = problem.sys, problem.uset, problem.T
    n, m = sys.n, sys.n_u
    w = problem.weights.w
    x0 = problem.x0

    if not np.any(x0):
        u = np.zeros((T, m))
        return SolveOutput(u, simulate(sys, x0, u), 0.0, 0, "converged", 0.0, 0.0, polished_at=0)

    # Work in units where x0 has norm < 1 and the input matrix has unit norm,
    # which keeps the Euclidean dynamics projection well conditioned.
    scale = 1.0 + np.linalg.norm(x0)
    bnorm = float(np.linalg.norm(sys.B, 2))
    in_scale = scale / bnorm if bnorm > 0 else scale
    x0s = x0 / scale
    uset_s = uset.scaled(1.0 / in_scale)
    sys_s = LtiSystem(sys.A, sys.B * (in_scale / scale))
    positive = w[w > 0]
    if positive.size == 0:
        raise ValueError("at least one weight must be positive")
    # geometric mean keeps both ends of fast-growing schedules within reach of rho
    w_ref = float(np.exp(np.mean(np.log(positive))))
    w_s = w / w_ref
    proj = DynamicsProjector(sys_s, T)
    alpha = cfg.over_relaxation
    rho = cfg.rho
    sqrt_dim = np.sqrt(T * (n + m))

    if warm_start is not None:
        ws = check_sequence(warm_start, "warm_start", m, T)
        yu = uset_s.project(ws / in_scale)
        yx = simulate(sys_s, x0s, yu)[1:]
    else:
        yu = np.zeros((T, m))
        yx = np.zeros((T, n))
    lx = np.zeros_like(yx)
    lu = np.zeros_like(yu)

    status = "max_iters"
    r_pri = r_dual = np.inf
    it = 0
    updates = 0
    for it in range(1, cfg.max_iters + 1):
        zx, zu = proj.project(x0s, yx - lx, yu - lu)
        hx = alpha * zx + (1.0 - alpha) * yx
        hu = alpha * zu + (1.0 - alpha) * yu
        yx_old, yu_old = yx, yu
        yx = block_soft_threshold(hx + lx, w_s / rho)
        yu = uset_s.project(hu + lu)
        lx = lx + hx - yx
        lu = lu + hu - yu

        r_pri = np.sqrt(np.sum((zx - yx) ** 2) + np.sum((zu - yu) ** 2))
        r_dual = rho * np.sqrt(np.sum((yx - yx_old) ** 2) + np.sum((yu - yu_old) ** 2))
        if not (np.isfinite(r_pri) and np.isfinite(r_dual)):
            raise SolverError(f"non-finite iterate at iteration {it}")
        z_norm = np.sqrt(np.sum(zx**2) + np.sum(zu**2))
        y_norm = np.sqrt(np.sum(yx**2) + np.sum(yu**2))
        l_norm = np.sqrt(np.sum(lx**2) + np.sum(lu**2))
        eps_pri = sqrt_dim * cfg.eps_abs + cfg.eps_rel * max(z_norm, y_norm)
        eps_dual = sqrt_dim * cfg.eps_abs + cfg.eps_rel * rho * l_norm
        if r_pri <= eps_pri and r_dual <= eps_dual:
            status = "converged"
            break
        if cfg.adaptive_rho and updates < _RHO_MAX_UPDATES and it % _RHO_PERIOD == 0:
            factor = _rho_update(r_pri, r_dual, rho / cfg.rho)
            if factor != 1.0:
                updates += 1
                rho *= factor
                # scaled duals live in units of 1/rho
                lx = lx / factor
                lu = lu / factor

    u = uset.project(yu * in_scale)
    x = simulate(sys, x0, u)
    J = objective(x, w)
    out = SolveOutput(
        u, x, J, it, status, float(r_pri * scale), float(r_dual * scale),
        extra={"raw_objective": J, "final_rho": rho},
    )
    if status != "converged":
        logger.warning("relaxation stopped at max_iters=%d (primal %.3g, dual %.3g)", it, r_pri, r_dual)
    if cfg.polish:
        # states that are merely small (not yet thresholded to zero) are
        # candidates too; the objective check rejects wrong guesses
        _polish(out, problem, _polish_start(yx, _POLISH_SMALL), cfg)
    return out


def _polish(out: SolveOutput, problem: RelaxationProblem, start: int | None, cfg: SolverConfig) -> None:
    if start is None:
        return
    sys, uset, w, T = problem.sys, problem.uset, problem.weights.w, problem.T
    for t1 in range(start, T + 1):
        head = nearest_reaching_controls(sys, uset, problem.x0, t1, out.u[:t1])
        if head is None:
            continue
        u = np.zeros_like(out.u)
        u[:t1] = head
        x = simulate(sys, problem.x0, u)
        J = objective(x, w)
        # the polished point must not be a worse solution of the relaxation,
        # up to the accuracy the splitting iterate itself was computed to
        if J <= out.objective * (1.0 + cfg.eps_rel) + cfg.eps_abs:
            out.u, out.x, out.objective, out.polished_at = u, x, J, t1
            return

"""Dense model of a discrete-time LTI system ``x(t+1) = A x(t) + B u(t)``.

Stacked input vectors always put ``u(0)`` first, so the block of the
controllability-style matrix that multiplies ``u(k)`` in ``x(t)`` is
``A^(t-1-k) B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_horizon, check_matrix, check_sequence, check_vector

__all__ = [
    "LtiSystem",
    "simulate",
    "build_delta",
    "condensed_state",
    "spectral_norm",
    "rank_b_full",
]


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """State-space pair ``(A, B)``.

    Parameters
    ----------
    A : array_like, shape (n, n)
    B : array_like, shape (n, n_u)
        A 1-D ``B`` is read as a single input column.
    """

    A: np.ndarray
    B: np.ndarray
    _powers: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        A = check_matrix(self.A, "A")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = check_matrix(B, "B", shape=(A.shape[0], None))
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        self._powers.append(np.eye(A.shape[0]))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    def power(self, t: int) -> np.ndarray:
        """``A**t`` by repeated multiplication, memoised on the instance."""
        t = check_horizon(t, "t", minimum=0)
        while len(self._powers) <= t:
            self._powers.append(self.A @ self._powers[-1])
        return self._powers[t]

    def __repr__(self):
        return f"LtiSystem(n={self.n}, n_u={self.n_u})"


def simulate(sys: LtiSystem, x0, u) -> np.ndarray:
    """Forward-simulate the system.

    Returns an array of shape ``(T + 1, n)`` whose row ``t`` is ``x(t)``;
    ``u`` has shape ``(T, n_u)`` (a flat stacked vector is also accepted).
    """
    x0 = check_vector(x0, "x0", sys.n)
    u = check_sequence(u, "u", sys.n_u)
    T = u.shape[0]
    x = np.empty((T + 1, sys.n))
    x[0] = x0
    for t in range(T):
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t]
    return x


def build_delta(sys: LtiSystem, t: int) -> np.ndarray:
    """``[A^(t-1) B, ..., A B, B]`` with shape ``(n, t * n_u)``."""
    t = check_horizon(t, "t")
    return np.hstack([sys.power(t - 1 - k) @ sys.B for k in range(t)])


def condensed_state(sys: LtiSystem, x0, u) -> np.ndarray:
    """``x(t) = A^t x0 + Delta_t u_bar`` for a stacked input of horizon ``t``."""
    x0 = check_vector(x0, "x0", sys.n)
    u = check_sequence(u, "u", sys.n_u)
    t = u.shape[0]
    if t == 0:
        return x0.copy()
    return sys.power(t) @ x0 + build_delta(sys, t) @ u.ravel()


def spectral_norm(M) -> float:
    """Largest singular value of ``M`` (0 for an empty matrix)."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def rank_b_full(sys: LtiSystem, tol: float | None = None) -> bool:
    """True when ``B`` has full column rank ``n_u``."""
    s = np.linalg.svd(sys.B, compute_uv=False)
    if tol is None:
        tol = 1e-10 * (s[0] if s.size else 0.0)
    if tol <= 0:
        # all-zero B: nothing is above a zero threshold
        tol = np.finfo(float).tiny
    return int(np.sum(s > tol)) == sys.n_u

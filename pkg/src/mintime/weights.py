"""Weight schedules for the sum-of-norms objective ``sum_t w(t) ||x(t)||``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_horizon, check_positive, check_vector
from .lti import LtiSystem, build_delta, spectral_norm
from .sets import AdmissibleSet

__all__ = [
    "WeightSchedule",
    "WeightOverflowError",
    "linear_weights",
    "theorem1_weights",
    "explicit_weights",
    "normalize",
    "OVERFLOW_GUARD",
]

OVERFLOW_GUARD = 1e300


class WeightOverflowError(OverflowError):
    """The recursive weight construction left the representable range."""

    def __init__(self, t: int, value: float):
        super().__init__(f"weight w({t}) = {value:g} exceeds the overflow guard {OVERFLOW_GUARD:g}")
        self.t = t
        self.value = value


@dataclass(frozen=True, eq=False)
class WeightSchedule:
    """Weights ``w(1), ..., w(T)`` stored 0-based in ``w``.

    ``provenance`` is ``"linear"``, ``"theorem1"`` or ``"explicit"``; the
    parameters that produced the schedule are kept in ``params``. Explicit
    schedules may contain zeros and need not increase (used by the
    feasibility oracle); the other two are checked positive and strictly
    increasing.
    """

    w: np.ndarray
    provenance: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = check_vector(self.w, "weights")
        if w.size == 0:
            raise ValueError("weight schedule must be non-empty")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if self.provenance not in ("linear", "theorem1", "explicit"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance != "explicit":
            if np.any(w <= 0):
                raise ValueError("weights must be strictly positive")
            if np.any(np.diff(w) <= 0):
                raise ValueError("weights must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    @property
    def T(self) -> int:
        return self.w.size

    def to_dict(self) -> dict:
        out = {"type": self.provenance, **self.params}
        if self.provenance == "explicit":
            out["values"] = self.w.tolist()
        return out


def linear_weights(a: float, T: int) -> WeightSchedule:
    """``w(t) = a * t`` for ``t = 1..T``."""
    a = check_positive(a, "a")
    T = check_horizon(T)
    return WeightSchedule(a * np.arange(1, T + 1, dtype=np.float64), "linear", {"a": a})


def explicit_weights(values) -> WeightSchedule:
    return WeightSchedule(np.asarray(values, dtype=np.float64), "explicit")


def theorem1_weights(
    sys: LtiSystem,
    uset: AdmissibleSet,
    eta: float,
    safety: float = 1.01,
    T: int = 1,
) -> WeightSchedule:
    """Recursive schedule that guarantees exact recovery of the minimum time.

    ``w(1) = 1`` and, for ``t >= 2``,

        w(t) = safety * (2 r / eta) * sum_{k<t} sqrt(k) ||Delta_k||_2 w(k)

    with ``r = uset.radius_bound()``. ``eta`` stands in for the smallest
    nonzero state norm reachable by an optimal sequence; smaller values are
    safer and make the weights grow faster.

    Raises
    ------
    WeightOverflowError
        If some ``w(t)`` exceeds ``OVERFLOW_GUARD`` or is not finite.
    """
    eta = check_positive(eta, "eta")
    safety = float(safety)
    if not safety > 1.0:
        raise ValueError(f"safety must be > 1, got {safety}")
    T = check_horizon(T)
    gain = 2.0 * uset.radius_bound() / eta
    w = np.empty(T)
    w[0] = 1.0
    acc = 0.0
    for t in range(2, T + 1):
        k = t - 1
        with np.errstate(over="ignore"):  # checked explicitly below
            acc += np.sqrt(k) * spectral_norm(build_delta(sys, k)) * w[k - 1]
            w[t - 1] = safety * gain * acc
        if not np.isfinite(w[t - 1]) or w[t - 1] > OVERFLOW_GUARD:
            raise WeightOverflowError(t, float(w[t - 1]))
    params = {"eta": eta, "safety": safety, "r": uset.radius_bound()}
    if np.any(np.diff(w) <= 0):
        warnings.warn(
            "theorem1 weights are not strictly increasing; eta is probably too large",
            RuntimeWarning,
            stacklevel=2,
        )
        return WeightSchedule(w, "explicit", params)
    return WeightSchedule(w, "theorem1", params)


def normalize(ws: WeightSchedule) -> WeightSchedule:
    """Divide every weight by the largest one."""
    top = float(np.max(ws.w))
    if top <= 0:
        raise ValueError("cannot normalize an all-zero schedule")
    return WeightSchedule(ws.w / top, ws.provenance, dict(ws.params))

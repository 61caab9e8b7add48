"""Admissible input sets: Euclidean balls and axis-aligned boxes.

Both families contain the origin by construction. Every method that takes an
input vector also accepts a batch with the input dimension on the last axis.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive, check_vector

__all__ = ["AdmissibleSet", "Ball2", "BallInf", "set_from_dict"]


class AdmissibleSet(ABC):
    """Bounded convex set of admissible controls containing the origin."""

    n_u: int

    @abstractmethod
    def project(self, v) -> np.ndarray:
        """Euclidean projection of ``v`` onto the set."""

    @abstractmethod
    def radius_bound(self) -> float:
        """Smallest ``r`` with ``||u||_2 <= r`` for every ``u`` in the set."""

    @abstractmethod
    def self_difference(self) -> "AdmissibleSet":
        """The Minkowski difference ``{a - b : a, b in U}``."""

    @abstractmethod
    def sample_uniform(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform draw(s) from the set."""

    @abstractmethod
    def scaled(self, factor: float) -> "AdmissibleSet":
        """The set ``factor * U`` for ``factor > 0``."""

    @abstractmethod
    def boundary_gap(self, v) -> np.ndarray:
        """Distance-to-boundary measure used for the bang-bang test.

        Ball: ``| ||v|| - r |``. Box: the largest coordinate gap
        ``max_i | |v_i| - radius_i |``, so a box control is on the boundary
        only when every coordinate saturates.
        """

    @abstractmethod
    def slack(self, v) -> np.ndarray:
        """Per-block room left before ``v`` hits the boundary (same shape as
        the blocks used by :meth:`projection_jacobian`)."""

    @abstractmethod
    def projection_jacobian(self, v) -> np.ndarray:
        """An element of the generalized Jacobian of :meth:`project` at ``v``."""

    @abstractmethod
    def to_dict(self) -> dict:
        """Plain-data description, inverse of :func:`set_from_dict`."""

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=np.float64)
        return bool(np.all(np.abs(self.project(v) - v) <= tol))

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1:] != (self.n_u,):
            raise ValueError(f"expected input vectors of size {self.n_u}, got shape {v.shape}")
        return v


@dataclass(frozen=True)
class Ball2(AdmissibleSet):
    """``{u : ||u||_2 <= r}`` in ``R^n_u``."""

    r: float
    n_u: int = 1

    def __post_init__(self):
        object.__setattr__(self, "r", check_positive(self.r, "r"))
        if int(self.n_u) < 1:
            raise ValueError(f"n_u must be >= 1, got {self.n_u}")
        object.__setattr__(self, "n_u", int(self.n_u))

    def project(self, v):
        v = self._check(v)
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        # v = 0 maps to itself; only points strictly outside are rescaled
        scale = np.where(nrm > self.r, self.r / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = v * scale
        # rounding can leave ||out|| one ulp above r; shrink until it is inside,
        # so membership holds exactly and projection is idempotent
        for _ in range(8):
            over = np.linalg.norm(out, axis=-1, keepdims=True) > self.r
            if not over.any():
                break
            out = np.where(over, out * (1.0 - 2.0**-52), out)
        return out

    def radius_bound(self):
        return self.r

    def self_difference(self):
        return Ball2(2.0 * self.r, self.n_u)

    def sample_uniform(self, rng, size=None):
        shape = (1 if size is None else size, self.n_u)
        g = rng.standard_normal(shape)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radius = self.r * rng.uniform(size=(shape[0], 1)) ** (1.0 / self.n_u)
        out = g * radius
        return out[0] if size is None else out

    def scaled(self, factor):
        return Ball2(self.r * check_positive(factor, "factor"), self.n_u)

    def boundary_gap(self, v):
        v = self._check(v)
        return np.abs(np.linalg.norm(v, axis=-1) - self.r)

    def slack(self, v):
        v = self._check(v)
        return self.r - np.linalg.norm(v, axis=-1)

    def projection_jacobian(self, v):
        v = self._check(v)
        nrm = np.linalg.norm(v)
        if nrm <= self.r:
            return np.eye(self.n_u)
        d = v / nrm
        return (self.r / nrm) * (np.eye(self.n_u) - np.outer(d, d))

    def to_dict(self):
        return {"type": "ball2", "r": self.r, "n_u": self.n_u}


@dataclass(frozen=True, eq=False)
class BallInf(AdmissibleSet):
    """``{u : |u_i| <= radii_i}``, the box with per-coordinate half-widths."""

    radii: np.ndarray

    def __post_init__(self):
        radii = check_vector(self.radii, "radii")
        if radii.size == 0 or np.any(radii <= 0):
            raise ValueError(f"radii must be non-empty and positive, got {radii}")
        radii.setflags(write=False)
        object.__setattr__(self, "radii", radii)

    @property
    def n_u(self):
        return self.radii.size

    def __eq__(self, other):
        return isinstance(other, BallInf) and np.array_equal(self.radii, other.radii)

    def __hash__(self):
        return hash(self.radii.tobytes())

    def project(self, v):
        v = self._check(v)
        return np.clip(v, -self.radii, self.radii)

    def radius_bound(self):
        return float(np.linalg.norm(self.radii))

    def self_difference(self):
        return BallInf(2.0 * self.radii)

    def sample_uniform(self, rng, size=None):
        shape = (self.n_u,) if size is None else (size, self.n_u)
        return rng.uniform(-1.0, 1.0, size=shape) * self.radii

    def scaled(self, factor):
        return BallInf(self.radii * check_positive(factor, "factor"))

    def boundary_gap(self, v):
        v = self._check(v)
        return np.max(np.abs(np.abs(v) - self.radii), axis=-1)

    def slack(self, v):
        v = self._check(v)
        return self.radii - np.abs(v)

    def projection_jacobian(self, v):
        v = self._check(v)
        return np.diag((np.abs(v) < self.radii).astype(np.float64))

    def to_dict(self):
        return {"type": "ballinf", "radii": self.radii.tolist()}


def set_from_dict(spec: dict, n_u: int | None = None) -> AdmissibleSet:
    """Build a set from ``{"type": "ball2", "r": ...}`` or
    ``{"type": "ballinf", "radii": [...]}``."""
    kind = spec.get("type")
    if kind == "ball2":
        dim = spec.get("n_u", n_u)
        return Ball2(spec["r"], 1 if dim is None else dim)
    if kind == "ballinf":
        return BallInf(spec["radii"])
    raise ValueError(f"unknown set type {kind!r}; expected 'ball2' or 'ballinf'")

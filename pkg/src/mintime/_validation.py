"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numbers

import numpy as np


def check_matrix(M, name: str, *, shape: tuple | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1 and shape is not None and len(shape) == 2 and shape[1] == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={M.ndim}")
    if shape is not None:
        for axis, (got, want) in enumerate(zip(M.shape, shape)):
            if want is not None and got != want:
                raise ValueError(
                    f"{name} has shape {M.shape}; expected size {want} along axis {axis}"
                )
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def check_vector(v, name: str, size: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {v.shape}")
    if size is not None and v.size != size:
        raise ValueError(f"{name} has length {v.size}; expected {size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_sequence(u, name: str, n_cols: int, length: int | None = None) -> np.ndarray:
    """Coerce an input/state sequence to shape (length, n_cols).

    A flat stacked vector of size ``length * n_cols`` is accepted and reshaped
    row-wise, so ``u(0)`` is always the first row.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        if u.size % n_cols:
            raise ValueError(f"{name} of size {u.size} is not a multiple of {n_cols}")
        u = u.reshape(-1, n_cols)
    if u.ndim != 2 or u.shape[1] != n_cols:
        raise ValueError(f"{name} must have shape (T, {n_cols}), got {u.shape}")
    if length is not None and u.shape[0] != length:
        raise ValueError(f"{name} has {u.shape[0]} rows; expected {length}")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} contains non-finite entries")
    return u


def check_positive(value, name: str, *, strict: bool = True) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value


def check_horizon(T, name: str = "T", *, minimum: int = 1) -> int:
    if isinstance(T, bool) or not isinstance(T, (numbers.Integral, np.integer)):
        raise ValueError(f"{name} must be an integer, got {T!r}")
    T = int(T)
    if T < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {T}")
    return T

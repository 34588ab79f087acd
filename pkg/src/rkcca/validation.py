"""Input validation helpers and shared exceptions."""

from __future__ import annotations

import numpy as np


class NumericError(RuntimeError):
    """A computation failed for numerical reasons (non-PSD input, singular system, ...)."""


class DegenerateDataError(ValueError):
    """The data admits no meaningful answer (all points identical, empty grid, ...)."""


class DegenerateSpectrumError(NumericError):
    """An eigenvalue-perturbation formula is undefined for a (near-)repeated eigenvalue."""


def as_float_array(x, name="array", ndim=None):
    """Coerce to a float64 ndarray and reject non-finite entries."""
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_data_matrix(x, name="X"):
    """Coerce to an (n, d) float matrix; 1-D input becomes a single column."""
    arr = as_float_array(x, name=name)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    return arr


def check_square(k, name="K"):
    arr = as_float_array(k, name=name, ndim=2)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_symmetric(k, name="K", tol=1e-8):
    arr = check_square(k, name=name)
    scale = max(1.0, float(np.abs(arr).max()))
    if np.abs(arr - arr.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric within tolerance {tol}")
    return arr


def check_simplex(w, n=None, name="weights", tol=1e-9):
    """Validate a nonnegative weight vector summing to one."""
    arr = as_float_array(w, name=name, ndim=1)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    if arr.min() < -tol:
        raise ValueError(f"{name} has negative entries (min {arr.min()})")
    if abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 (got {arr.sum()})")
    return arr


def check_consistent_length(*arrays):
    lengths = {np.asarray(a).shape[0] for a in arrays if a is not None}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent first dimensions: {sorted(lengths)}")
